#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace chem {

using Index = Eigen::Index;

inline constexpr double kPi = 3.14159265358979323846264338327950288;

/// 2D image raster, row-major so flattening matches the on-disk layout.
template <class Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Scalar>
using Vector = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
using ComplexImage =
    Eigen::Array<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ImageD = Image<double>;
using VectorD = Vector<double>;

/// Thrown when an input file or artifact is malformed or inconsistent.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a stored artifact's configuration hash does not match the run.
struct HashMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class Scalar>
Eigen::Map<const Vector<Scalar>> flatten(const Image<Scalar>& img) {
  return Eigen::Map<const Vector<Scalar>>(img.data(), img.size());
}

template <class Scalar>
Image<Scalar> unflatten(const Eigen::Ref<const Vector<Scalar>>& v, Index rows, Index cols) {
  if (v.size() != rows * cols) throw std::invalid_argument("unflatten: size mismatch");
  Image<Scalar> out(rows, cols);
  Eigen::Map<Vector<Scalar>>(out.data(), out.size()) = v;
  return out;
}

template <class Scalar>
void require_valid_image(const Image<Scalar>& img, const char* what) {
  if (img.rows() < 1 || img.cols() < 1)
    throw std::invalid_argument(std::string(what) + ": empty image");
  if (!img.isFinite().all())
    throw std::invalid_argument(std::string(what) + ": non-finite samples");
}

template <class DerivedA, class DerivedB>
double mse(const Eigen::ArrayBase<DerivedA>& a, const Eigen::ArrayBase<DerivedB>& b) {
  return static_cast<double>((a - b).square().mean());
}

template <class Scalar>
Scalar sum_of_squares(const Image<Scalar>& img) {
  return img.square().sum();
}

}  // namespace chem
