#pragma once

#include <cmath>
#include <stdexcept>

#include "chem/core.hpp"
#include "chem/fft.hpp"

namespace chem {

/// Unit-mass blur kernel stored centered at ((n+1)/2, (n+1)/2) in 1-based
/// coordinates. Convolution routines roll the center to the origin, so a
/// blur does not translate the scene.
template <class Scalar>
struct Psf {
  Image<Scalar> kernel;
  Scalar fwhm = Scalar(0);
  Scalar sigma = Scalar(0);

  /// Kernel with all mass on the pixel that ifftshift maps to the origin;
  /// convolution with it is the identity.
  static Psf delta(Index side) {
    Psf p;
    p.kernel = Image<Scalar>::Zero(side, side);
    p.kernel(side / 2, side / 2) = Scalar(1);
    return p;
  }
};

inline constexpr double kFwhmToSigma = 0.42466090014400952136075141705144;  // 1/(2 sqrt(2 ln 2))

/// Normalized isotropic Gaussian kernel of the given full width at half
/// maximum. The center (n+1)/2 is fractional for even sides and the formula
/// is evaluated as written.
template <class Scalar>
Psf<Scalar> gaussian_psf(Index side, Scalar fwhm) {
  if (side < 1) throw std::invalid_argument("gaussian_psf: side must be >= 1");
  if (!(fwhm > Scalar(0))) throw std::invalid_argument("gaussian_psf: fwhm must be positive");
  const Scalar sigma = fwhm * Scalar(kFwhmToSigma);
  const Scalar center = Scalar(side + 1) / Scalar(2);  // 1-based
  Psf<Scalar> p;
  p.fwhm = fwhm;
  p.sigma = sigma;
  p.kernel.resize(side, side);
  const Scalar inv2s2 = Scalar(1) / (Scalar(2) * sigma * sigma);
  for (Index r = 0; r < side; ++r) {
    const Scalar dr = Scalar(r + 1) - center;
    for (Index c = 0; c < side; ++c) {
      const Scalar dc = Scalar(c + 1) - center;
      p.kernel(r, c) = std::exp(-(dr * dr + dc * dc) * inv2s2);
    }
  }
  p.kernel /= p.kernel.sum();
  return p;
}

/// DFT of the origin-rolled kernel; the diagonal of the circulant blur
/// operator.
template <class Scalar>
ComplexImage<Scalar> transfer_function(const Psf<Scalar>& psf) {
  return fft2(ifftshift(psf.kernel));
}

}  // namespace chem
