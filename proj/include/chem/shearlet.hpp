#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chem/core.hpp"
#include "chem/fft.hpp"
#include "chem/subband.hpp"

namespace chem {

/// Band-limited cone-adapted shearlet frame. `shear_levels[s]` is the shear
/// exponent k of detail scale s listed coarsest first; each cone carries the
/// integer shears -2^k..2^k at that scale.
struct ShearletSpec {
  int scales = 3;
  std::vector<int> shear_levels = {1, 2, 2};

  void validate() const {
    if (scales < 1) throw std::invalid_argument("ShearletSpec: scales must be >= 1");
    if (static_cast<int>(shear_levels.size()) != scales)
      throw std::invalid_argument("ShearletSpec: one shear level per scale required");
    for (int k : shear_levels)
      if (k < 0) throw std::invalid_argument("ShearletSpec: negative shear level");
  }

  std::string canonical_string() const {
    std::ostringstream os;
    os << "shearlet:scales=" << scales << ":shears=";
    for (std::size_t i = 0; i < shear_levels.size(); ++i)
      os << (i ? "," : "") << shear_levels[i];
    return os.str();
  }
};

namespace detail {

// Meyer auxiliary polynomial: 0 below 0, 1 above 1, C^3 in between.
inline double meyer_nu(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * t * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t * t * t);
}

// Unit bump on [-1,1] whose integer translates square-sum to one.
inline double meyer_bump(double u) {
  if (u <= -1.0 || u >= 1.0) return 0.0;
  if (u <= 0.0) return std::sin(1.5707963267948966 * meyer_nu(u + 1.0));
  return std::cos(1.5707963267948966 * meyer_nu(u));
}

inline double meyer_fall(double v) {
  if (v <= 0.0) return 1.0;
  if (v >= 1.0) return 0.0;
  return std::cos(1.5707963267948966 * meyer_nu(v));
}

}  // namespace detail

/// Frequency windows for one image size. After pointwise renormalization the
/// windows satisfy sum_k |psi_k|^2 = 1 on every bin, which makes the adjoint
/// the exact inverse.
template <class Scalar>
class ShearletSystem {
 public:
  ShearletSystem(const ShearletSpec& spec, Index n) : spec_(spec), n_(n) {
    spec_.validate();
    if (n < 4 || (n & (n - 1)) != 0)
      throw std::invalid_argument("shearlet transform requires side a power of 2, >= 4");
    build();
  }

  const ShearletSpec& spec() const { return spec_; }
  Index side() const { return n_; }
  std::size_t band_count() const { return windows_.size(); }
  const Image<Scalar>& window(std::size_t b) const { return windows_[b]; }
  const SubbandLayout& layout() const { return layout_; }

 private:
  struct BandMeta {
    int scale;        // 1 = finest
    std::string label;
    double angle_deg;  // spatial feature orientation
    bool is_approx;
  };

  void build() {
    const Index n = n_;
    const int J = spec_.scales;
    const double top = std::log2(static_cast<double>(n) / 2.0);

    std::vector<BandMeta> metas;
    std::vector<Image<Scalar>> wins;

    // Low-pass covers the center; one octave of roll-off below the
    // coarsest detail band.
    const double c_coarse = top - (J - 1) - 0.5;
    metas.push_back({J, "approx", -1.0, true});
    wins.push_back(make_window([&](double fy, double fx) {
      const double rho = std::max(std::abs(fx), std::abs(fy));
      if (rho <= 0.0) return 1.0;
      return detail::meyer_fall(std::log2(rho) - (c_coarse - 1.0));
    }));

    // Detail scales, coarsest first to match the flattened ordering.
    for (int scale = J; scale >= 1; --scale) {
      const double center = top - (scale - 1) - 0.5;
      const int k = spec_.shear_levels[static_cast<std::size_t>(J - scale)];
      const double two_k = static_cast<double>(Index(1) << k);
      for (int cone = 0; cone < 2; ++cone) {
        for (int s = -(1 << k); s <= (1 << k); ++s) {
          const double freq_angle =
              cone == 0 ? std::atan2(static_cast<double>(s), two_k) * 57.29577951308232
                        : std::atan2(two_k, static_cast<double>(s)) * 57.29577951308232;
          double feature_angle = std::fmod(freq_angle + 90.0, 180.0);
          if (feature_angle < 0.0) feature_angle += 180.0;
          std::ostringstream label;
          label << (cone == 0 ? "cx" : "cy") << ":s=" << s << "/" << (1 << k);
          metas.push_back({scale, label.str(), feature_angle, false});
          wins.push_back(make_window([&](double fy, double fx) {
            const double rho = std::max(std::abs(fx), std::abs(fy));
            if (rho <= 0.0) return 0.0;
            const double radial = detail::meyer_bump(std::log2(rho) - center);
            if (radial == 0.0) return 0.0;
            const double num = cone == 0 ? fy : fx;
            const double den = cone == 0 ? fx : fy;
            if (den == 0.0) return 0.0;
            const double angular = detail::meyer_bump(two_k * (num / den) - s);
            return radial * angular;
          }));
        }
      }
    }

    // Symmetrize under frequency negation. Nyquist rows/columns of an even
    // grid have no mirror bin, so the raw shear windows are not exactly even
    // there; without this step the coefficients pick up imaginary parts.
    for (auto& w : wins) {
      const Image<Scalar> raw = w;
      for (Index r = 0; r < n; ++r)
        for (Index c = 0; c < n; ++c) {
          const Scalar a = raw(r, c);
          const Scalar b = raw((n - r) % n, (n - c) % n);
          w(r, c) = std::sqrt((a * a + b * b) / Scalar(2));
        }
    }

    // Renormalize to an exact Parseval partition.
    Image<Scalar> total = Image<Scalar>::Zero(n, n);
    for (const auto& w : wins) total += w.square();
    if ((total <= Scalar(0)).any())
      throw std::runtime_error("shearlet windows leave uncovered frequencies");
    const Image<Scalar> scale_back = total.sqrt().inverse();
    for (auto& w : wins) w *= scale_back;

    windows_ = std::move(wins);

    std::vector<SubbandRecord> bands;
    Index offset = 0;
    for (const auto& m : metas) {
      bands.push_back({m.scale, m.label, m.angle_deg, offset, n, n, m.is_approx});
      offset += n * n;
    }
    layout_ = SubbandLayout(spec_.canonical_string(), J, n, n, std::move(bands));
  }

  template <class Fn>
  Image<Scalar> make_window(Fn&& value_at) const {
    Image<Scalar> w(n_, n_);
    for (Index r = 0; r < n_; ++r) {
      const double fy = static_cast<double>(signed_frequency(r, n_));
      for (Index c = 0; c < n_; ++c) {
        const double fx = static_cast<double>(signed_frequency(c, n_));
        w(r, c) = static_cast<Scalar>(value_at(fy, fx));
      }
    }
    return w;
  }

  ShearletSpec spec_;
  Index n_;
  std::vector<Image<Scalar>> windows_;
  SubbandLayout layout_;
};

template <class Scalar>
CoefficientField<Scalar> shearlet_forward(const Image<Scalar>& img,
                                          const ShearletSystem<Scalar>& sys) {
  require_valid_image(img, "shearlet_forward");
  if (img.rows() != sys.side() || img.cols() != sys.side())
    throw std::invalid_argument("shearlet_forward: image must be square with the system side");
  const ComplexImage<Scalar> spectrum = fft2(img);
  CoefficientField<Scalar> field;
  field.layout = sys.layout();
  field.values.resize(field.layout.total_size());
  for (std::size_t b = 0; b < sys.band_count(); ++b) {
    const ComplexImage<Scalar> banded = spectrum * sys.window(b).template cast<std::complex<Scalar>>();
    const Image<Scalar> coef = ifft2_real(banded);
    const auto& rec = field.layout.band(b);
    field.values.segment(rec.offset, rec.size()) = flatten(coef);
  }
  return field;
}

template <class Scalar>
Image<Scalar> shearlet_inverse(const CoefficientField<Scalar>& field,
                               const ShearletSystem<Scalar>& sys) {
  field.check_consistent();
  if (!field.layout.same_shape(sys.layout()))
    throw std::invalid_argument("shearlet_inverse: layout mismatch");
  if (field.state != NormState::raw)
    throw std::invalid_argument("shearlet_inverse: expects raw coefficients");
  const Index n = sys.side();
  ComplexImage<Scalar> acc = ComplexImage<Scalar>::Zero(n, n);
  for (std::size_t b = 0; b < sys.band_count(); ++b) {
    const auto& rec = field.layout.band(b);
    const Image<Scalar> coef =
        unflatten<Scalar>(field.values.segment(rec.offset, rec.size()), rec.rows, rec.cols);
    acc += fft2(coef) * sys.window(b).template cast<std::complex<Scalar>>();
  }
  return ifft2_real(acc);
}

template <class Scalar>
Image<Scalar> reconstruct_filtered(const CoefficientField<Scalar>& field,
                                   const std::function<bool(Index)>& keep,
                                   const ShearletSystem<Scalar>& sys) {
  CoefficientField<Scalar> filtered = field;
  for (Index j = 0; j < filtered.values.size(); ++j)
    if (!keep(j)) filtered.values[j] = Scalar(0);
  return shearlet_inverse(filtered, sys);
}

}  // namespace chem
