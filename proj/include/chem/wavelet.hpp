#pragma once

#include <cmath>
#include <limits>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chem/core.hpp"
#include "chem/subband.hpp"

namespace chem {

namespace detail {

// Daubechies minimum-phase scaling filters, normalized so the taps sum to
// sqrt(2). Values are validated against the orthonormality identities at
// construction rather than trusted.
inline const std::vector<double>& daubechies_scaling(const std::string& family) {
  static const std::vector<double> haar = {0.7071067811865475244008443621048490,
                                           0.7071067811865475244008443621048490};
  static const std::vector<double> db4 = {
      0.23037781330885523,  0.71484657055254153,  0.63088076792959036,  -0.02798376941698385,
      -0.18703481171888114, 0.03084138183598697,  0.03288301166698295,  -0.01059740178499728};
  static const std::vector<double> db8 = {
      0.05441584224308161,   0.31287159091446592,   0.67563073629801285,    0.58535468365486909,
      -0.015829105256023893, -0.28401554296242809,  0.00047248457399797254, 0.128747426620186,
      -0.01736930100202211,  -0.04408825393106472,  0.013981027917015516,   0.008746094047015655,
      -0.00487035299301066,  -0.0003917403729959771, 0.0006754494059985568, -0.00011747678400228192};
  if (family == "haar" || family == "db1") return haar;
  if (family == "db4") return db4;
  if (family == "db8") return db8;
  throw std::invalid_argument("unknown wavelet family: " + family);
}

// Newton-polishes tabulated taps onto the defining constraints
// (shift-orthonormality plus vanishing moments); published tables are only
// good to ~1e-12 and the identities are required to hold tighter.
inline std::vector<double> refine_scaling_filter(std::vector<double> h) {
  const int L = static_cast<int>(h.size());
  const int N = L / 2;
  for (int iter = 0; iter < 3; ++iter) {
    Eigen::VectorXd f(2 * N);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * N, L);
    for (int m = 0; m < N; ++m) {
      double acc = 0.0;
      for (int k = 0; k + 2 * m < L; ++k) acc += h[k] * h[k + 2 * m];
      f[m] = acc - (m == 0 ? 1.0 : 0.0);
      for (int j = 0; j < L; ++j) {
        double d = 0.0;
        if (j + 2 * m < L) d += h[j + 2 * m];
        if (j - 2 * m >= 0) d += h[j - 2 * m];
        jac(m, j) = d;
      }
    }
    for (int p = 0; p < N; ++p) {
      double acc = 0.0;
      for (int k = 0; k < L; ++k) {
        const double w = (k % 2 == 0 ? 1.0 : -1.0) * std::pow(static_cast<double>(k), p);
        acc += w * h[k];
        jac(N + p, k) = w;
      }
      f[N + p] = acc;
    }
    const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(f);
    for (int k = 0; k < L; ++k) h[k] -= step[k];
    if (f.lpNorm<Eigen::Infinity>() < 1e-15) break;
  }
  return h;
}

}  // namespace detail

/// Orthonormal filter bank under periodic extension. Analysis uses the
/// correlation form against the same taps, so one lo/hi pair serves both
/// analysis and synthesis.
template <class Scalar>
struct WaveletSpec {
  std::string family;
  std::vector<Scalar> lo;
  std::vector<Scalar> hi;

  static WaveletSpec make(const std::string& family) {
    const std::vector<double> table = detail::refine_scaling_filter(detail::daubechies_scaling(family));
    WaveletSpec spec;
    spec.family = (family == "db1") ? "haar" : family;
    spec.lo.assign(table.begin(), table.end());
    spec.hi.resize(spec.lo.size());
    const std::size_t L = spec.lo.size();
    for (std::size_t k = 0; k < L; ++k) {
      const Scalar sign = (k % 2 == 0) ? Scalar(1) : Scalar(-1);
      spec.hi[k] = sign * spec.lo[L - 1 - k];
    }
    spec.validate(std::max(Scalar(1e-12), Scalar(100) * std::numeric_limits<Scalar>::epsilon()));
    return spec;
  }

  std::size_t length() const { return lo.size(); }

  /// Quadrature-mirror identities: unit norm, orthogonality to even shifts,
  /// lo/hi orthogonality, and sum(lo) = sqrt(2).
  void validate(Scalar tol) const {
    const std::size_t L = lo.size();
    Scalar sum = 0;
    for (Scalar v : lo) sum += v;
    if (std::abs(sum - Scalar(std::sqrt(2.0))) > tol)
      throw std::invalid_argument("wavelet filter: sum != sqrt(2)");
    for (std::size_t shift = 0; 2 * shift < L; ++shift) {
      Scalar acc_ll = 0, acc_lh = 0;
      for (std::size_t k = 0; k + 2 * shift < L; ++k) {
        acc_ll += lo[k] * lo[k + 2 * shift];
        acc_lh += lo[k] * hi[k + 2 * shift];
      }
      const Scalar expect = (shift == 0) ? Scalar(1) : Scalar(0);
      if (std::abs(acc_ll - expect) > tol)
        throw std::invalid_argument("wavelet filter: shift-orthonormality violated");
      if (shift > 0 && std::abs(acc_lh) > tol)
        throw std::invalid_argument("wavelet filter: lo/hi orthogonality violated");
    }
    Scalar acc = 0;
    for (std::size_t k = 0; k < L; ++k) acc += lo[k] * hi[k];
    if (std::abs(acc) > tol)
      throw std::invalid_argument("wavelet filter: lo/hi orthogonality violated");
  }
};

namespace detail {

// lo[i] = sum_k f_lo[k] x[(2i+k) mod n], same for hi.
template <class Scalar>
void analysis_1d(const Scalar* x, Index n, const WaveletSpec<Scalar>& spec, Scalar* lo,
                 Scalar* hi) {
  const Index L = static_cast<Index>(spec.length());
  const Index half = n / 2;
  for (Index i = 0; i < half; ++i) {
    Scalar acc_lo = 0, acc_hi = 0;
    for (Index k = 0; k < L; ++k) {
      const Scalar v = x[(2 * i + k) % n];
      acc_lo += spec.lo[static_cast<std::size_t>(k)] * v;
      acc_hi += spec.hi[static_cast<std::size_t>(k)] * v;
    }
    lo[i] = acc_lo;
    hi[i] = acc_hi;
  }
}

template <class Scalar>
void synthesis_1d(const Scalar* lo, const Scalar* hi, Index n, const WaveletSpec<Scalar>& spec,
                  Scalar* x) {
  const Index L = static_cast<Index>(spec.length());
  const Index half = n / 2;
  for (Index j = 0; j < n; ++j) x[j] = Scalar(0);
  for (Index i = 0; i < half; ++i) {
    for (Index k = 0; k < L; ++k) {
      const Index j = (2 * i + k) % n;
      x[j] += lo[i] * spec.lo[static_cast<std::size_t>(k)] +
              hi[i] * spec.hi[static_cast<std::size_t>(k)];
    }
  }
}

// One separable level: row pass then column pass.
// LH = row-lo/col-hi, HL = row-hi/col-lo, HH = row-hi/col-hi.
template <class Scalar>
void dwt_level(const Image<Scalar>& in, const WaveletSpec<Scalar>& spec, Image<Scalar>& ll,
               Image<Scalar>& lh, Image<Scalar>& hl, Image<Scalar>& hh) {
  const Index rows = in.rows(), cols = in.cols();
  const Index hr = rows / 2, hc = cols / 2;
  Image<Scalar> row_lo(rows, hc), row_hi(rows, hc);
  std::vector<Scalar> buf(static_cast<std::size_t>(std::max(rows, cols)));
  std::vector<Scalar> lo_buf(static_cast<std::size_t>(std::max(rows, cols)));
  std::vector<Scalar> hi_buf(static_cast<std::size_t>(std::max(rows, cols)));
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) buf[static_cast<std::size_t>(c)] = in(r, c);
    analysis_1d(buf.data(), cols, spec, lo_buf.data(), hi_buf.data());
    for (Index c = 0; c < hc; ++c) {
      row_lo(r, c) = lo_buf[static_cast<std::size_t>(c)];
      row_hi(r, c) = hi_buf[static_cast<std::size_t>(c)];
    }
  }
  ll.resize(hr, hc);
  lh.resize(hr, hc);
  hl.resize(hr, hc);
  hh.resize(hr, hc);
  for (Index c = 0; c < hc; ++c) {
    for (Index r = 0; r < rows; ++r) buf[static_cast<std::size_t>(r)] = row_lo(r, c);
    analysis_1d(buf.data(), rows, spec, lo_buf.data(), hi_buf.data());
    for (Index r = 0; r < hr; ++r) {
      ll(r, c) = lo_buf[static_cast<std::size_t>(r)];
      lh(r, c) = hi_buf[static_cast<std::size_t>(r)];
    }
    for (Index r = 0; r < rows; ++r) buf[static_cast<std::size_t>(r)] = row_hi(r, c);
    analysis_1d(buf.data(), rows, spec, lo_buf.data(), hi_buf.data());
    for (Index r = 0; r < hr; ++r) {
      hl(r, c) = lo_buf[static_cast<std::size_t>(r)];
      hh(r, c) = hi_buf[static_cast<std::size_t>(r)];
    }
  }
}

template <class Scalar>
Image<Scalar> idwt_level(const Image<Scalar>& ll, const Image<Scalar>& lh,
                         const Image<Scalar>& hl, const Image<Scalar>& hh,
                         const WaveletSpec<Scalar>& spec) {
  const Index hr = ll.rows(), hc = ll.cols();
  const Index rows = 2 * hr, cols = 2 * hc;
  Image<Scalar> row_lo(rows, hc), row_hi(rows, hc);
  std::vector<Scalar> lo_buf(static_cast<std::size_t>(std::max(rows, cols)));
  std::vector<Scalar> hi_buf(static_cast<std::size_t>(std::max(rows, cols)));
  std::vector<Scalar> out_buf(static_cast<std::size_t>(std::max(rows, cols)));
  for (Index c = 0; c < hc; ++c) {
    for (Index r = 0; r < hr; ++r) {
      lo_buf[static_cast<std::size_t>(r)] = ll(r, c);
      hi_buf[static_cast<std::size_t>(r)] = lh(r, c);
    }
    synthesis_1d(lo_buf.data(), hi_buf.data(), rows, spec, out_buf.data());
    for (Index r = 0; r < rows; ++r) row_lo(r, c) = out_buf[static_cast<std::size_t>(r)];
    for (Index r = 0; r < hr; ++r) {
      lo_buf[static_cast<std::size_t>(r)] = hl(r, c);
      hi_buf[static_cast<std::size_t>(r)] = hh(r, c);
    }
    synthesis_1d(lo_buf.data(), hi_buf.data(), rows, spec, out_buf.data());
    for (Index r = 0; r < rows; ++r) row_hi(r, c) = out_buf[static_cast<std::size_t>(r)];
  }
  Image<Scalar> out(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < hc; ++c) {
      lo_buf[static_cast<std::size_t>(c)] = row_lo(r, c);
      hi_buf[static_cast<std::size_t>(c)] = row_hi(r, c);
    }
    synthesis_1d(lo_buf.data(), hi_buf.data(), cols, spec, out_buf.data());
    for (Index c = 0; c < cols; ++c) out(r, c) = out_buf[static_cast<std::size_t>(c)];
  }
  return out;
}

}  // namespace detail

/// Subband tiling for a `levels`-deep decomposition: approximation first,
/// then detail scales coarsest to finest, LH/HL/HH within each scale.
inline SubbandLayout make_wavelet_layout(const std::string& family, int levels, Index rows,
                                         Index cols) {
  if (levels < 1) throw std::invalid_argument("wavelet levels must be >= 1");
  const Index div = Index(1) << levels;
  if (rows % div != 0 || cols % div != 0 || rows / div < 1 || cols / div < 1)
    throw std::invalid_argument("image sides must be divisible by 2^levels");
  std::vector<SubbandRecord> bands;
  Index offset = 0;
  const Index ar = rows >> levels, ac = cols >> levels;
  bands.push_back({levels, "approx", -1.0, offset, ar, ac, true});
  offset += ar * ac;
  for (int scale = levels; scale >= 1; --scale) {
    const Index sr = rows >> scale, sc = cols >> scale;
    for (const char* o : {"LH", "HL", "HH"}) {
      bands.push_back({scale, o, -1.0, offset, sr, sc, false});
      offset += sr * sc;
    }
  }
  return SubbandLayout("wavelet:" + family, levels, rows, cols, std::move(bands));
}

template <class Scalar>
CoefficientField<Scalar> dwt_forward(const Image<Scalar>& img, const WaveletSpec<Scalar>& spec,
                                     int levels) {
  require_valid_image(img, "dwt_forward");
  SubbandLayout layout = make_wavelet_layout(spec.family, levels, img.rows(), img.cols());
  CoefficientField<Scalar> field;
  field.layout = layout;
  field.values.resize(layout.total_size());

  std::vector<Image<Scalar>> lhs, hls, hhs;  // per scale, finest first
  Image<Scalar> current = img;
  for (int level = 1; level <= levels; ++level) {
    Image<Scalar> ll, lh, hl, hh;
    detail::dwt_level(current, spec, ll, lh, hl, hh);
    lhs.push_back(std::move(lh));
    hls.push_back(std::move(hl));
    hhs.push_back(std::move(hh));
    current = std::move(ll);
  }

  std::size_t b = 0;
  auto write_band = [&](const Image<Scalar>& block) {
    const auto& rec = layout.band(b++);
    field.values.segment(rec.offset, rec.size()) = flatten(block);
  };
  write_band(current);
  for (int scale = levels; scale >= 1; --scale) {
    write_band(lhs[static_cast<std::size_t>(scale - 1)]);
    write_band(hls[static_cast<std::size_t>(scale - 1)]);
    write_band(hhs[static_cast<std::size_t>(scale - 1)]);
  }
  return field;
}

template <class Scalar>
Image<Scalar> dwt_inverse(const CoefficientField<Scalar>& field, const WaveletSpec<Scalar>& spec) {
  field.check_consistent();
  if (field.layout.transform_id() != "wavelet:" + spec.family)
    throw std::invalid_argument("dwt_inverse: layout/spec mismatch");
  if (field.state != NormState::raw)
    throw std::invalid_argument("dwt_inverse: expects raw coefficients");
  const int levels = field.layout.levels();

  auto read_band = [&](std::size_t b) {
    const auto& rec = field.layout.band(b);
    return unflatten<Scalar>(field.values.segment(rec.offset, rec.size()), rec.rows, rec.cols);
  };

  Image<Scalar> current = read_band(0);
  std::size_t b = 1;
  for (int scale = levels; scale >= 1; --scale) {
    Image<Scalar> lh = read_band(b++);
    Image<Scalar> hl = read_band(b++);
    Image<Scalar> hh = read_band(b++);
    current = detail::idwt_level(current, lh, hl, hh, spec);
  }
  return current;
}

/// Zeroes every coefficient the predicate rejects, then inverts.
template <class Scalar>
Image<Scalar> reconstruct_filtered(const CoefficientField<Scalar>& field,
                                   const std::function<bool(Index)>& keep,
                                   const WaveletSpec<Scalar>& spec) {
  CoefficientField<Scalar> filtered = field;
  for (Index j = 0; j < filtered.values.size(); ++j)
    if (!keep(j)) filtered.values[j] = Scalar(0);
  return dwt_inverse(filtered, spec);
}

}  // namespace chem
