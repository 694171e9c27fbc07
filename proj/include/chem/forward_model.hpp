#pragma once

#include <cstdint>
#include <stdexcept>

#include "chem/core.hpp"
#include "chem/fft.hpp"
#include "chem/psf.hpp"
#include "chem/rng.hpp"

namespace chem {

/// Degradation description made available to reconstruction models.
template <class Scalar>
struct ForwardModel {
  Psf<Scalar> psf;
  Scalar noise_sigma = Scalar(0);
};

template <class Scalar>
struct DegradationConfig {
  Psf<Scalar> psf;
  Scalar noise_sigma = Scalar(0);
  std::uint64_t seed = 0;
};

/// Circular blur, no additive noise. Kernels with a handful of nonzero taps
/// are convolved directly (exact for a delta); anything wider goes through
/// the transfer function.
template <class Scalar>
Image<Scalar> convolve_psf(const Image<Scalar>& x, const Psf<Scalar>& psf) {
  if (x.rows() != psf.kernel.rows() || x.cols() != psf.kernel.cols())
    throw std::invalid_argument("convolve_psf: image and kernel grids differ");
  const Index rows = x.rows(), cols = x.cols();
  const Image<Scalar> origin_kernel = ifftshift(psf.kernel);
  Index nnz = 0;
  for (Index r = 0; r < rows && nnz <= 8; ++r)
    for (Index c = 0; c < cols && nnz <= 8; ++c)
      if (origin_kernel(r, c) != Scalar(0)) ++nnz;
  if (nnz <= 8) {
    Image<Scalar> y = Image<Scalar>::Zero(rows, cols);
    for (Index k = 0; k < rows; ++k)
      for (Index l = 0; l < cols; ++l) {
        const Scalar w = origin_kernel(k, l);
        if (w == Scalar(0)) continue;
        for (Index i = 0; i < rows; ++i)
          for (Index j = 0; j < cols; ++j)
            y(i, j) += w * x(((i - k) % rows + rows) % rows, ((j - l) % cols + cols) % cols);
      }
    return y;
  }
  const ComplexImage<Scalar> spec = fft2(x) * fft2(origin_kernel);
  return ifft2_real(spec);
}

/// y = h * x + eta with seeded white Gaussian noise; deterministic per seed.
template <class Scalar>
Image<Scalar> degrade(const Image<Scalar>& x, const DegradationConfig<Scalar>& cfg) {
  if (cfg.noise_sigma < Scalar(0))
    throw std::invalid_argument("degrade: negative noise sigma");
  Image<Scalar> y = convolve_psf(x, cfg.psf);
  if (cfg.noise_sigma > Scalar(0)) {
    Rng rng(cfg.seed);
    for (Index r = 0; r < y.rows(); ++r)
      for (Index c = 0; c < y.cols(); ++c)
        y(r, c) += cfg.noise_sigma * static_cast<Scalar>(rng.normal());
  }
  return y;
}

}  // namespace chem
