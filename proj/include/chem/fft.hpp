#pragma once

#include <unsupported/Eigen/FFT>

#include <complex>
#include <vector>

#include "chem/core.hpp"

namespace chem {

// 2D transforms built from row/column passes of the 1D FFT.
// Convention: fft2 is unnormalized, ifft2 carries the full 1/(rows*cols).

template <class Scalar>
ComplexImage<Scalar> fft2(const ComplexImage<Scalar>& in) {
  const Index rows = in.rows(), cols = in.cols();
  ComplexImage<Scalar> out(rows, cols);
  Eigen::FFT<Scalar> fft;
  std::vector<std::complex<Scalar>> buf_in, buf_out;

  buf_in.resize(static_cast<std::size_t>(cols));
  buf_out.resize(static_cast<std::size_t>(cols));
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) buf_in[static_cast<std::size_t>(c)] = in(r, c);
    fft.fwd(buf_out, buf_in);
    for (Index c = 0; c < cols; ++c) out(r, c) = buf_out[static_cast<std::size_t>(c)];
  }

  buf_in.resize(static_cast<std::size_t>(rows));
  buf_out.resize(static_cast<std::size_t>(rows));
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) buf_in[static_cast<std::size_t>(r)] = out(r, c);
    fft.fwd(buf_out, buf_in);
    for (Index r = 0; r < rows; ++r) out(r, c) = buf_out[static_cast<std::size_t>(r)];
  }
  return out;
}

template <class Scalar>
ComplexImage<Scalar> fft2(const Image<Scalar>& in) {
  ComplexImage<Scalar> c(in.rows(), in.cols());
  for (Index r = 0; r < in.rows(); ++r)
    for (Index j = 0; j < in.cols(); ++j) c(r, j) = std::complex<Scalar>(in(r, j), Scalar(0));
  return fft2(c);
}

template <class Scalar>
ComplexImage<Scalar> ifft2(const ComplexImage<Scalar>& in) {
  ComplexImage<Scalar> conj = in.conjugate();
  ComplexImage<Scalar> out = fft2(conj).conjugate();
  out *= Scalar(1) / static_cast<Scalar>(in.rows() * in.cols());
  return out;
}

template <class Scalar>
Image<Scalar> ifft2_real(const ComplexImage<Scalar>& in) {
  ComplexImage<Scalar> full = ifft2(in);
  Image<Scalar> out(in.rows(), in.cols());
  for (Index r = 0; r < in.rows(); ++r)
    for (Index c = 0; c < in.cols(); ++c) out(r, c) = full(r, c).real();
  return out;
}

/// Circularly rolls the array so the centered sample floor(n/2) moves to
/// index 0 on each axis.
template <class Scalar>
Image<Scalar> ifftshift(const Image<Scalar>& in) {
  const Index rows = in.rows(), cols = in.cols();
  const Index sr = rows / 2, sc = cols / 2;
  Image<Scalar> out(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) out(r, c) = in((r + sr) % rows, (c + sc) % cols);
  return out;
}

/// Signed DFT bin frequency for index k of an n-point transform.
inline Index signed_frequency(Index k, Index n) { return k < (n + 1) / 2 ? k : k - n; }

}  // namespace chem
