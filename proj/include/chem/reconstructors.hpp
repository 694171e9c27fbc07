#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chem/core.hpp"
#include "chem/fft.hpp"
#include "chem/forward_model.hpp"
#include "chem/psf.hpp"
#include "chem/wavelet.hpp"

namespace chem {

/// Reconstruction model interface. Implementations are immutable after
/// construction and evaluation is pure, so instances can be shared across
/// threads.
template <class Scalar>
class Reconstructor {
 public:
  virtual ~Reconstructor() = default;

  virtual Image<Scalar> reconstruct(const Image<Scalar>& y, const ForwardModel<Scalar>& fm) const = 0;

  /// Hook for benchmark oracles that are allowed to see the ground truth.
  virtual Image<Scalar> reconstruct_with_truth(const Image<Scalar>& y,
                                               const ForwardModel<Scalar>& fm,
                                               const Image<Scalar>* /*truth*/) const {
    return reconstruct(y, fm);
  }

  virtual std::string id() const = 0;
  virtual bool deterministic() const { return true; }
  virtual bool uses_ground_truth() const { return false; }
};

enum class TikhonovPenalty { laplacian, identity };

template <class Scalar>
struct TikhonovConfig {
  Scalar lambda = Scalar(-1);  // negative selects SURE
  TikhonovPenalty penalty = TikhonovPenalty::laplacian;

  bool use_sure() const { return lambda < Scalar(0); }
};

namespace detail {

// Squared symbol of the regularization filter on the DFT grid.
template <class Scalar>
Image<Scalar> penalty_symbol_sq(TikhonovPenalty penalty, Index rows, Index cols) {
  Image<Scalar> g(rows, cols);
  if (penalty == TikhonovPenalty::identity) {
    g.setOnes();
    return g;
  }
  // 5-point Laplacian under periodic boundary.
  for (Index r = 0; r < rows; ++r) {
    const Scalar wy = Scalar(2) * Scalar(kPi) * Scalar(signed_frequency(r, rows)) / Scalar(rows);
    for (Index c = 0; c < cols; ++c) {
      const Scalar wx = Scalar(2) * Scalar(kPi) * Scalar(signed_frequency(c, cols)) / Scalar(cols);
      const Scalar v = Scalar(4) - Scalar(2) * std::cos(wy) - Scalar(2) * std::cos(wx);
      g(r, c) = v * v;
    }
  }
  return g;
}

}  // namespace detail

/// Quadratic-regularized inverse filter, solved exactly in the Fourier
/// domain through the circulant diagonalization of blur and penalty.
template <class Scalar>
Image<Scalar> tikhonov_deconvolve(const Image<Scalar>& y, const Psf<Scalar>& psf, Scalar lambda,
                                  TikhonovPenalty penalty = TikhonovPenalty::laplacian) {
  if (y.rows() != psf.kernel.rows() || y.cols() != psf.kernel.cols())
    throw std::invalid_argument("tikhonov_deconvolve: grids differ");
  if (lambda < Scalar(0)) throw std::invalid_argument("tikhonov_deconvolve: negative lambda");
  const ComplexImage<Scalar> h = transfer_function(psf);
  const Image<Scalar> h2 = h.abs2();
  const Image<Scalar> g2 = detail::penalty_symbol_sq<Scalar>(penalty, y.rows(), y.cols());
  if (lambda == Scalar(0) && (h2 <= Scalar(0)).any())
    throw std::runtime_error("tikhonov_deconvolve: vanishing transfer function with lambda = 0");
  const Image<Scalar> denom = h2 + lambda * g2;
  ComplexImage<Scalar> xhat = fft2(y);
  xhat *= h.conjugate();
  xhat /= denom.template cast<std::complex<Scalar>>();
  return ifft2_real(xhat);
}

template <class Scalar>
struct SureCurve {
  std::vector<Scalar> lambdas;
  std::vector<Scalar> values;
  Scalar chosen = Scalar(0);
  std::size_t chosen_index = 0;
};

/// Default grid: 40 log-spaced multipliers of the peak squared transfer
/// gain (which is 1 for a unit-mass kernel).
template <class Scalar>
std::vector<Scalar> default_sure_grid(const Psf<Scalar>& psf, std::size_t count = 40) {
  const Scalar ref = transfer_function(psf).abs2().maxCoeff();
  std::vector<Scalar> grid(count);
  const double lo = std::log10(1e-6), hi = std::log10(1e2);
  for (std::size_t i = 0; i < count; ++i) {
    const double e = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    grid[i] = ref * static_cast<Scalar>(std::pow(10.0, e));
  }
  return grid;
}

/// Unbiased estimate of the observation-domain risk E|H(x_hat - x)|^2 for the
/// linear Tikhonov estimator; the divergence term is the exact trace of the
/// hat matrix, summed over Fourier symbols.
template <class Scalar>
SureCurve<Scalar> sure_select_lambda(const Image<Scalar>& y, const Psf<Scalar>& psf,
                                     Scalar noise_sigma, const std::vector<Scalar>& grid,
                                     TikhonovPenalty penalty = TikhonovPenalty::laplacian) {
  if (grid.empty()) throw std::invalid_argument("sure_select_lambda: empty grid");
  if (!(noise_sigma > Scalar(0)))
    throw std::invalid_argument("sure_select_lambda: noise sigma must be positive");
  const Index n = y.size();
  const ComplexImage<Scalar> h = transfer_function(psf);
  const Image<Scalar> h2 = h.abs2();
  const Image<Scalar> g2 = detail::penalty_symbol_sq<Scalar>(penalty, y.rows(), y.cols());
  const Image<Scalar> y2 = fft2(y).abs2();
  const Scalar sigma2 = noise_sigma * noise_sigma;

  SureCurve<Scalar> curve;
  curve.lambdas = grid;
  curve.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Scalar lambda = grid[i];
    const Image<Scalar> denom = h2 + lambda * g2;
    // residual factor 1 - |H|^2/denom = lambda g2 / denom
    const Image<Scalar> rfac = lambda * g2 / denom;
    const Scalar rss = (rfac.square() * y2).sum() / Scalar(n);
    const Scalar df = (h2 / denom).sum();
    curve.values[i] = rss - Scalar(n) * sigma2 + Scalar(2) * sigma2 * df;
  }
  curve.chosen_index = static_cast<std::size_t>(
      std::min_element(curve.values.begin(), curve.values.end()) - curve.values.begin());
  curve.chosen = grid[curve.chosen_index];
  return curve;
}

/// Divergence (degrees of freedom) of the blur-then-restore map at a given
/// lambda; exposed separately for audits against dense linear algebra.
template <class Scalar>
Scalar tikhonov_divergence(const Psf<Scalar>& psf, Scalar lambda,
                           TikhonovPenalty penalty = TikhonovPenalty::laplacian) {
  const Image<Scalar> h2 = transfer_function(psf).abs2();
  const Image<Scalar> g2 =
      detail::penalty_symbol_sq<Scalar>(penalty, psf.kernel.rows(), psf.kernel.cols());
  return (h2 / (h2 + lambda * g2)).sum();
}

/// Fourier Wiener filter with a flat spectral signal-to-noise ratio.
template <class Scalar>
Image<Scalar> wiener_deconvolve(const Image<Scalar>& y, const Psf<Scalar>& psf, Scalar snr) {
  if (y.rows() != psf.kernel.rows() || y.cols() != psf.kernel.cols())
    throw std::invalid_argument("wiener_deconvolve: grids differ");
  if (!(snr > Scalar(0))) throw std::invalid_argument("wiener_deconvolve: snr must be positive");
  const ComplexImage<Scalar> h = transfer_function(psf);
  const Image<Scalar> denom = h.abs2() + Scalar(1) / snr;
  ComplexImage<Scalar> xhat = fft2(y);
  xhat *= h.conjugate();
  xhat /= denom.template cast<std::complex<Scalar>>();
  return ifft2_real(xhat);
}

template <class Scalar>
class TikhonovReconstructor final : public Reconstructor<Scalar> {
 public:
  explicit TikhonovReconstructor(TikhonovConfig<Scalar> cfg = {}) : cfg_(cfg) {}

  Image<Scalar> reconstruct(const Image<Scalar>& y, const ForwardModel<Scalar>& fm) const override {
    Scalar lambda = cfg_.lambda;
    if (cfg_.use_sure())
      lambda = sure_select_lambda(y, fm.psf, fm.noise_sigma, default_sure_grid(fm.psf),
                                  cfg_.penalty)
                   .chosen;
    return tikhonov_deconvolve(y, fm.psf, lambda, cfg_.penalty);
  }

  std::string id() const override {
    std::ostringstream os;
    if (cfg_.use_sure())
      os << "tikhonov:sure";
    else
      os << "tikhonov:lambda=" << cfg_.lambda;
    return os.str();
  }

 private:
  TikhonovConfig<Scalar> cfg_;
};

template <class Scalar>
class WienerReconstructor final : public Reconstructor<Scalar> {
 public:
  explicit WienerReconstructor(Scalar snr) : snr_(snr) {}

  Image<Scalar> reconstruct(const Image<Scalar>& y, const ForwardModel<Scalar>& fm) const override {
    return wiener_deconvolve(y, fm.psf, snr_);
  }

  std::string id() const override {
    std::ostringstream os;
    os << "wiener:snr=" << snr_;
    return os.str();
  }

 private:
  Scalar snr_;
};

template <class Scalar>
class IdentityReconstructor final : public Reconstructor<Scalar> {
 public:
  Image<Scalar> reconstruct(const Image<Scalar>& y, const ForwardModel<Scalar>&) const override {
    return y;
  }
  std::string id() const override { return "identity"; }
};

/// Returns the ground truth; the zero-hallucination reference model.
template <class Scalar>
class GroundTruthReconstructor final : public Reconstructor<Scalar> {
 public:
  Image<Scalar> reconstruct(const Image<Scalar>&, const ForwardModel<Scalar>&) const override {
    throw std::logic_error("oracle model requires the ground truth channel");
  }
  Image<Scalar> reconstruct_with_truth(const Image<Scalar>& y, const ForwardModel<Scalar>&,
                                       const Image<Scalar>* truth) const override {
    if (truth == nullptr) throw std::logic_error("oracle model requires the ground truth channel");
    (void)y;
    return *truth;
  }
  std::string id() const override { return "oracle"; }
  bool uses_ground_truth() const override { return true; }
};

/// Soft-thresholds detail coefficients of the wrapped model's output.
template <class Scalar>
class WaveletShrinkReconstructor final : public Reconstructor<Scalar> {
 public:
  WaveletShrinkReconstructor(std::shared_ptr<const Reconstructor<Scalar>> base,
                             std::string family, int levels, Scalar threshold)
      : base_(std::move(base)),
        spec_(WaveletSpec<Scalar>::make(family)),
        levels_(levels),
        threshold_(threshold) {}

  Image<Scalar> reconstruct(const Image<Scalar>& y, const ForwardModel<Scalar>& fm) const override {
    Image<Scalar> base = base_->reconstruct(y, fm);
    CoefficientField<Scalar> field = dwt_forward(base, spec_, levels_);
    for (std::size_t b = 0; b < field.layout.band_count(); ++b) {
      const auto& rec = field.layout.band(b);
      if (rec.is_approx) continue;
      auto seg = field.values.segment(rec.offset, rec.size());
      seg = seg.sign() * (seg.abs() - threshold_).max(Scalar(0));
    }
    return dwt_inverse(field, spec_);
  }

  std::string id() const override {
    std::ostringstream os;
    os << "shrink:base=" << base_->id() << ",t=" << threshold_;
    return os.str();
  }

 private:
  std::shared_ptr<const Reconstructor<Scalar>> base_;
  WaveletSpec<Scalar> spec_;
  int levels_;
  Scalar threshold_;
};

enum class TexturePlacement { brightest_blob, center };

/// Oriented sinusoid patch with unit RMS over its support. `angle_deg` is the
/// stripe orientation; the wavevector is perpendicular.
template <class Scalar>
struct TextureSpec {
  Scalar angle_deg = Scalar(45);
  Scalar wavelength = Scalar(3);
  Index patch_side = 16;
  TexturePlacement placement = TexturePlacement::brightest_blob;

  Image<Scalar> render() const {
    if (patch_side < 1) throw std::invalid_argument("TextureSpec: empty patch");
    Image<Scalar> patch(patch_side, patch_side);
    const Scalar theta = angle_deg * Scalar(kPi) / Scalar(180);
    const Scalar kx = -std::sin(theta) * Scalar(2) * Scalar(kPi) / wavelength;
    const Scalar ky = std::cos(theta) * Scalar(2) * Scalar(kPi) / wavelength;
    const Scalar mid = Scalar(patch_side - 1) / Scalar(2);
    for (Index r = 0; r < patch_side; ++r)
      for (Index c = 0; c < patch_side; ++c)
        patch(r, c) = std::sin(kx * (Scalar(c) - mid) + ky * (Scalar(r) - mid));
    const Scalar rms = std::sqrt(patch.square().mean());
    if (rms > Scalar(0)) patch /= rms;
    return patch;
  }
};

/// Wraps a model and adds a texture patch to its output at a data-dependent
/// position, producing plausible content that is absent from the truth.
template <class Scalar>
class HallucinatorReconstructor final : public Reconstructor<Scalar> {
 public:
  HallucinatorReconstructor(std::shared_ptr<const Reconstructor<Scalar>> base,
                            TextureSpec<Scalar> texture, Scalar amplitude)
      : base_(std::move(base)), texture_(texture), amplitude_(amplitude) {
    if (amplitude < Scalar(0))
      throw std::invalid_argument("hallucinator: amplitude must be >= 0");
    patch_ = texture_.render();
  }

  Image<Scalar> reconstruct(const Image<Scalar>& y, const ForwardModel<Scalar>& fm) const override {
    Image<Scalar> out = base_->reconstruct(y, fm);
    if (amplitude_ == Scalar(0)) return out;
    add_patch(out);
    return out;
  }

  std::string id() const override {
    std::ostringstream os;
    os << "hallucinator:base=" << base_->id() << ",amp=" << amplitude_
       << ",angle=" << texture_.angle_deg;
    return os.str();
  }

 private:
  void add_patch(Image<Scalar>& img) const {
    const Index p = texture_.patch_side;
    if (img.rows() < p || img.cols() < p)
      throw std::invalid_argument("hallucinator: patch larger than image");
    Index r0 = (img.rows() - p) / 2, c0 = (img.cols() - p) / 2;
    if (texture_.placement == TexturePlacement::brightest_blob) {
      Index br = 0, bc = 0;
      smoothed_argmax(img, br, bc);
      // Offset from the blob so the texture reads as a neighbouring feature;
      // clamped so the whole patch stays inside the frame.
      r0 = std::clamp<Index>(br + p / 2, 0, img.rows() - p);
      c0 = std::clamp<Index>(bc + p / 2, 0, img.cols() - p);
    }
    img.block(r0, c0, p, p) += amplitude_ * patch_;
  }

  static void smoothed_argmax(const Image<Scalar>& img, Index& br, Index& bc) {
    Scalar best = -std::numeric_limits<Scalar>::infinity();
    br = bc = 0;
    for (Index r = 1; r + 1 < img.rows(); ++r) {
      for (Index c = 1; c + 1 < img.cols(); ++c) {
        const Scalar v = img.block(r - 1, c - 1, 3, 3).sum();
        if (v > best) {
          best = v;
          br = r;
          bc = c;
        }
      }
    }
  }

  std::shared_ptr<const Reconstructor<Scalar>> base_;
  TextureSpec<Scalar> texture_;
  Scalar amplitude_;
  Image<Scalar> patch_;
};

}  // namespace chem
