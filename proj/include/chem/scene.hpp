#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "chem/core.hpp"
#include "chem/forward_model.hpp"
#include "chem/rng.hpp"

namespace chem {

enum class SourceProfile { gaussian, sersic };

/// One analytic source; flux is the (continuous) integral over the plane.
template <class Scalar>
struct Source {
  Scalar row = 0, col = 0;
  Scalar flux = 1;
  Scalar scale_radius = 2;      // sigma for gaussian, effective radius for sersic
  Scalar ellipticity = 0;       // in [0, 0.9)
  Scalar position_angle = 0;    // radians
  SourceProfile profile = SourceProfile::gaussian;
  Scalar sersic_index = 1;
};

template <class Scalar>
struct SceneConfig {
  Index side = 128;
  int min_sources = 1;
  int max_sources = 4;
  Scalar flux_min = Scalar(50);
  Scalar flux_max = Scalar(500);
  Scalar radius_min = Scalar(1.5);
  Scalar radius_max = Scalar(6);
  Scalar max_ellipticity = Scalar(0.6);
  Scalar sersic_fraction = Scalar(0.3);
  Scalar border_margin = Scalar(0.15);  // keep centers this fraction away from edges
  std::uint64_t seed = 0;

  void validate() const {
    if (side < 1) throw std::invalid_argument("SceneConfig: side must be >= 1");
    if (min_sources < 0 || max_sources < min_sources)
      throw std::invalid_argument("SceneConfig: bad source count range");
    if (flux_min < Scalar(0) || flux_max < flux_min)
      throw std::invalid_argument("SceneConfig: bad flux range");
  }
};

namespace detail {

template <class Scalar>
Scalar sersic_b(Scalar n) {
  // Half-light coefficient; the usual asymptotic expansion.
  return Scalar(2) * n - Scalar(1.0 / 3.0) + Scalar(4.0 / 405.0) / n;
}

template <class Scalar>
void render_source(Image<Scalar>& img, const Source<Scalar>& src) {
  const Index side = img.rows();
  const Scalar a = src.scale_radius * (Scalar(1) + src.ellipticity);
  const Scalar b = src.scale_radius * (Scalar(1) - src.ellipticity);
  const Scalar ca = std::cos(src.position_angle), sa = std::sin(src.position_angle);
  Scalar peak;
  Scalar bn = Scalar(0);
  if (src.profile == SourceProfile::gaussian) {
    peak = src.flux / (Scalar(2) * Scalar(kPi) * a * b);
  } else {
    bn = sersic_b(src.sersic_index);
    const Scalar n = src.sersic_index;
    // Total flux of exp(-b (r/re)^(1/n)) over the plane: 2 pi n re^2 Gamma(2n) / b^(2n).
    const Scalar total = Scalar(2) * Scalar(kPi) * n * a * b *
                         Scalar(std::tgamma(2.0 * static_cast<double>(n))) /
                         std::pow(bn, Scalar(2) * n);
    peak = src.flux / total;
  }
  for (Index r = 0; r < side; ++r) {
    for (Index c = 0; c < side; ++c) {
      const Scalar dy = Scalar(r) - src.row;
      const Scalar dx = Scalar(c) - src.col;
      const Scalar u = (ca * dx + sa * dy) / a;
      const Scalar v = (-sa * dx + ca * dy) / b;
      if (src.profile == SourceProfile::gaussian) {
        img(r, c) += peak * std::exp(-(u * u + v * v) / Scalar(2));
      } else {
        const Scalar rr = std::sqrt(u * u + v * v);
        img(r, c) += peak * std::exp(-bn * std::pow(rr, Scalar(1) / src.sersic_index));
      }
    }
  }
}

}  // namespace detail

template <class Scalar>
std::vector<Source<Scalar>> draw_sources(const SceneConfig<Scalar>& cfg, Rng& rng) {
  cfg.validate();
  const int count =
      cfg.min_sources +
      static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(cfg.max_sources - cfg.min_sources + 1)));
  std::vector<Source<Scalar>> sources;
  const Scalar lo = cfg.border_margin * Scalar(cfg.side - 1);
  const Scalar hi = Scalar(cfg.side - 1) - lo;
  for (int i = 0; i < count; ++i) {
    Source<Scalar> s;
    s.row = static_cast<Scalar>(rng.uniform(static_cast<double>(lo), static_cast<double>(hi)));
    s.col = static_cast<Scalar>(rng.uniform(static_cast<double>(lo), static_cast<double>(hi)));
    const double lf = rng.uniform(std::log(static_cast<double>(cfg.flux_min)),
                                  std::log(static_cast<double>(cfg.flux_max)));
    s.flux = static_cast<Scalar>(std::exp(lf));
    s.scale_radius = static_cast<Scalar>(
        rng.uniform(static_cast<double>(cfg.radius_min), static_cast<double>(cfg.radius_max)));
    s.ellipticity =
        static_cast<Scalar>(rng.uniform(0.0, static_cast<double>(cfg.max_ellipticity)));
    s.position_angle = static_cast<Scalar>(rng.uniform(0.0, kPi));
    s.profile = rng.uniform() < static_cast<double>(cfg.sersic_fraction) ? SourceProfile::sersic
                                                                         : SourceProfile::gaussian;
    sources.push_back(s);
  }
  return sources;
}

template <class Scalar>
Image<Scalar> render_scene(Index side, const std::vector<Source<Scalar>>& sources) {
  Image<Scalar> img = Image<Scalar>::Zero(side, side);
  for (const auto& s : sources) detail::render_source(img, s);
  return img;
}

/// Sum of analytic profiles sampled on the pixel grid.
template <class Scalar>
Image<Scalar> synthesize_scene(const SceneConfig<Scalar>& cfg) {
  Rng rng(cfg.seed);
  return render_scene(cfg.side, draw_sources(cfg, rng));
}

/// Affine map taking the dataset's value range onto [-1, 1].
template <class Scalar>
struct NormalizationConstants {
  Scalar offset = Scalar(0);
  Scalar scale = Scalar(1);

  Image<Scalar> apply(const Image<Scalar>& img) const { return (img - offset) / scale; }
  Image<Scalar> invert(const Image<Scalar>& img) const { return img * scale + offset; }
};

template <class Scalar>
struct DatasetPair {
  Image<Scalar> degraded;      // model input
  Image<Scalar> truth;         // ground truth scene
  std::uint64_t seed = 0;      // per-sample derived seed
  Scalar min_peak_snr = std::numeric_limits<Scalar>::quiet_NaN();
};

template <class Scalar>
struct Dataset {
  std::vector<DatasetPair<Scalar>> pairs;
  Scalar noise_sigma = Scalar(0);
  Scalar fwhm = Scalar(0);
  NormalizationConstants<Scalar> norm;
  Scalar min_peak_snr = Scalar(0);
  Scalar max_peak_snr = Scalar(0);
};

/// Generates n (degraded, truth) pairs. A negative noise sigma in `deg`
/// selects the derive-from-scene rule: sigma is set to the faintest source's
/// blurred peak across the dataset, so that object sits at peak S/N of one.
template <class Scalar>
Dataset<Scalar> make_dataset(const SceneConfig<Scalar>& scene, const DegradationConfig<Scalar>& deg,
                             int n) {
  if (n < 1) throw std::invalid_argument("make_dataset: n must be >= 1");
  scene.validate();

  struct Drawn {
    std::vector<Source<Scalar>> sources;
    Image<Scalar> truth;
    std::vector<Scalar> blurred_peaks;
    std::uint64_t seed;
  };
  std::vector<Drawn> drawn;
  drawn.reserve(static_cast<std::size_t>(n));
  Scalar faintest_peak = std::numeric_limits<Scalar>::infinity();
  for (int i = 0; i < n; ++i) {
    Drawn d;
    d.seed = scene.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i + 1));
    Rng rng = Rng::derive(scene.seed, static_cast<std::uint64_t>(i));
    d.sources = draw_sources(scene, rng);
    d.truth = render_scene(scene.side, d.sources);
    for (const auto& s : d.sources) {
      Image<Scalar> single = render_scene(scene.side, std::vector<Source<Scalar>>{s});
      const Scalar peak = convolve_psf(single, deg.psf).maxCoeff();
      d.blurred_peaks.push_back(peak);
      faintest_peak = std::min(faintest_peak, peak);
    }
    drawn.push_back(std::move(d));
  }

  Dataset<Scalar> out;
  out.fwhm = deg.psf.fwhm;
  out.noise_sigma = deg.noise_sigma < Scalar(0) ? faintest_peak : deg.noise_sigma;

  Scalar lo = std::numeric_limits<Scalar>::infinity();
  Scalar hi = -std::numeric_limits<Scalar>::infinity();
  out.min_peak_snr = std::numeric_limits<Scalar>::infinity();
  out.max_peak_snr = Scalar(0);
  for (int i = 0; i < n; ++i) {
    DatasetPair<Scalar> pair;
    pair.seed = drawn[static_cast<std::size_t>(i)].seed;
    pair.truth = std::move(drawn[static_cast<std::size_t>(i)].truth);
    DegradationConfig<Scalar> d = deg;
    d.noise_sigma = out.noise_sigma;
    d.seed = pair.seed;
    pair.degraded = degrade(pair.truth, d);
    if (out.noise_sigma > Scalar(0)) {
      Scalar snr_min = std::numeric_limits<Scalar>::infinity();
      Scalar snr_max = Scalar(0);
      for (Scalar p : drawn[static_cast<std::size_t>(i)].blurred_peaks) {
        snr_min = std::min(snr_min, p / out.noise_sigma);
        snr_max = std::max(snr_max, p / out.noise_sigma);
      }
      pair.min_peak_snr = snr_min;
      out.min_peak_snr = std::min(out.min_peak_snr, snr_min);
      out.max_peak_snr = std::max(out.max_peak_snr, snr_max);
    }
    lo = std::min({lo, pair.degraded.minCoeff(), pair.truth.minCoeff()});
    hi = std::max({hi, pair.degraded.maxCoeff(), pair.truth.maxCoeff()});
    out.pairs.push_back(std::move(pair));
  }
  if (out.noise_sigma <= Scalar(0)) {
    out.min_peak_snr = std::numeric_limits<Scalar>::infinity();
    out.max_peak_snr = std::numeric_limits<Scalar>::infinity();
  }

  out.norm.offset = (hi + lo) / Scalar(2);
  out.norm.scale = std::max((hi - lo) / Scalar(2), Scalar(1e-12));
  return out;
}

}  // namespace chem
