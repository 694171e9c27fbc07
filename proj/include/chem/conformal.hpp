#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "chem/core.hpp"
#include "chem/subband.hpp"

namespace chem {

/// Calibration family g_lambda applied to the initial radii. Both choices
/// are non-decreasing in lambda for every fixed radius.
enum class GFamily : std::uint8_t { multiplicative, additive };

inline std::string g_family_name(GFamily g) {
  return g == GFamily::multiplicative ? "multiplicative" : "additive";
}

inline GFamily g_family_from_name(const std::string& s) {
  if (s == "multiplicative") return GFamily::multiplicative;
  if (s == "additive") return GFamily::additive;
  throw std::invalid_argument("unknown calibration family: " + s);
}

inline constexpr double kRadiusEpsilon = 1e-12;

template <class Scalar>
Scalar g_apply(GFamily g, Scalar lambda, Scalar radius) {
  const Scalar r = std::max(radius, Scalar(kRadiusEpsilon));
  return g == GFamily::multiplicative ? lambda * r : r + lambda;
}

/// Smallest lambda in [a, b] with g_lambda(radius) >= residual; closed form
/// for both families.
template <class Scalar>
Scalar g_invert(GFamily g, Scalar radius, Scalar residual, Scalar a, Scalar b) {
  const Scalar r = std::max(radius, Scalar(kRadiusEpsilon));
  const Scalar raw = g == GFamily::multiplicative ? residual / r : residual - r;
  return std::clamp(raw, a, b);
}

struct ConformalQuantileIndex {
  Index k = 0;          // 1-based order statistic
  bool overflow = false;  // requested level exceeds 1
};

/// Order statistic backing the (1-alpha)(1+1/N) empirical quantile:
/// k = ceil((1-alpha)(N+1)), snapped to the nearest integer when within
/// 1e-9 to keep exact products like 0.9*(N+1) stable.
inline ConformalQuantileIndex conformal_quantile_index(Index n, double alpha) {
  if (n < 1) throw std::invalid_argument("conformal_quantile_index: need n >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("conformal_quantile_index: alpha must be in (0,1)");
  double v = (1.0 - alpha) * static_cast<double>(n + 1);
  const double snapped = std::round(v);
  if (std::abs(v - snapped) < 1e-9) v = snapped;
  ConformalQuantileIndex out;
  const double k = std::ceil(v);
  if (k > static_cast<double>(n)) {
    out.k = n;
    out.overflow = true;
  } else {
    out.k = std::max<Index>(1, static_cast<Index>(k));
  }
  return out;
}

/// k-th smallest (1-based) of a scratch copy.
template <class Scalar>
Scalar order_statistic(std::vector<Scalar>& scratch, Index k) {
  auto nth = scratch.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(scratch.begin(), nth, scratch.end());
  return *nth;
}

/// Per-coefficient interval radii: calibrated multipliers over initial radii.
template <class Scalar>
struct RadiusModel {
  GFamily g = GFamily::multiplicative;
  Scalar bound_lo = Scalar(0);
  Scalar bound_hi = Scalar(1e6);
  Scalar alpha = Scalar(0.01);
  Vector<Scalar> r_hat;   // initial radii, epsilon-floored
  Vector<Scalar> lambda;  // calibrated multipliers

  Index size() const { return r_hat.size(); }

  Scalar half_width(Index j) const { return g_apply(g, lambda[j], r_hat[j]); }

  Vector<Scalar> half_widths() const {
    Vector<Scalar> out(size());
    for (Index j = 0; j < size(); ++j) out[j] = half_width(j);
    return out;
  }
};

template <class Scalar>
struct CalibrationResult {
  RadiusModel<Scalar> model;
  Index n_calibration = 0;
  Scalar quantile_level = Scalar(0);   // (1-alpha)(1+1/N)
  bool level_overflow = false;         // level > 1: lambdas forced to the upper bound
  Scalar clipped_lo_fraction = Scalar(0);
  Scalar clipped_hi_fraction = Scalar(0);
};

/// Residual magnitudes |prediction_hat - truth_hat| arranged samples-by-rows.
template <class Scalar>
using ResidualMatrix = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Initial radii: per-coefficient empirical (1-alpha)-quantile of the
/// residual magnitudes, using the inflated-order-statistic convention shared
/// with the calibration step, floored at epsilon.
template <class Scalar>
Vector<Scalar> init_radius(const ResidualMatrix<Scalar>& residuals, double alpha) {
  const Index n = residuals.rows();
  if (n < 1) throw std::invalid_argument("init_radius: empty reference set");
  const auto q = conformal_quantile_index(n, alpha);
  Vector<Scalar> r(residuals.cols());
  std::vector<Scalar> scratch(static_cast<std::size_t>(n));
  for (Index j = 0; j < residuals.cols(); ++j) {
    for (Index i = 0; i < n; ++i) scratch[static_cast<std::size_t>(i)] = residuals(i, j);
    r[j] = std::max(order_statistic(scratch, q.k), Scalar(kRadiusEpsilon));
  }
  return r;
}

/// Calibrates the per-coefficient multipliers: each sample contributes the
/// smallest lambda whose inflated radius covers its residual, and the
/// (1-alpha)(1+1/N) empirical quantile of those is kept. When N is too small
/// for the level (level > 1) the upper bound is used and flagged.
template <class Scalar>
CalibrationResult<Scalar> calibrate_lambda(const ResidualMatrix<Scalar>& residuals,
                                           const Vector<Scalar>& r_hat, GFamily g, Scalar a,
                                           Scalar b, double alpha) {
  const Index n = residuals.rows();
  if (n < 1) throw std::invalid_argument("calibrate_lambda: empty calibration set");
  if (residuals.cols() != r_hat.size())
    throw std::invalid_argument("calibrate_lambda: radii/residual width mismatch");
  if (!(a < b)) throw std::invalid_argument("calibrate_lambda: invalid bounds, need a < b");

  CalibrationResult<Scalar> out;
  out.n_calibration = n;
  out.quantile_level =
      Scalar((1.0 - alpha) * (1.0 + 1.0 / static_cast<double>(n)));
  out.model.g = g;
  out.model.bound_lo = a;
  out.model.bound_hi = b;
  out.model.alpha = Scalar(alpha);
  out.model.r_hat = r_hat;
  out.model.lambda.resize(r_hat.size());

  const auto q = conformal_quantile_index(n, alpha);
  out.level_overflow = q.overflow;

  Index clipped_lo = 0, clipped_hi = 0;
  std::vector<Scalar> scratch(static_cast<std::size_t>(n));
  for (Index j = 0; j < residuals.cols(); ++j) {
    if (q.overflow) {
      out.model.lambda[j] = b;
      ++clipped_hi;
      continue;
    }
    for (Index i = 0; i < n; ++i)
      scratch[static_cast<std::size_t>(i)] = g_invert(g, r_hat[j], residuals(i, j), a, b);
    const Scalar lam = order_statistic(scratch, q.k);
    out.model.lambda[j] = lam;
    if (lam <= a) ++clipped_lo;
    if (lam >= b) ++clipped_hi;
  }
  out.clipped_lo_fraction = Scalar(clipped_lo) / Scalar(residuals.cols());
  out.clipped_hi_fraction = Scalar(clipped_hi) / Scalar(residuals.cols());
  return out;
}

template <class Scalar>
struct IntervalField {
  Vector<Scalar> center;
  Vector<Scalar> half_width;

  Vector<Scalar> lower() const { return center - half_width; }
  Vector<Scalar> upper() const { return center + half_width; }
};

/// Intervals around the transformed prediction with the calibrated radii.
template <class Scalar>
IntervalField<Scalar> predict_intervals(const CoefficientField<Scalar>& prediction_hat,
                                        const RadiusModel<Scalar>& model) {
  prediction_hat.check_consistent();
  if (prediction_hat.values.size() != model.size())
    throw std::invalid_argument("predict_intervals: transform/calibration size mismatch");
  IntervalField<Scalar> out;
  out.center = prediction_hat.values;
  out.half_width = model.half_widths();
  return out;
}

template <class Scalar>
struct CoverageReport {
  Vector<Scalar> per_coefficient;  // fraction of samples covered, per j
  Scalar mean_coverage = Scalar(0);
  Scalar mean_miscoverage = Scalar(0);
};

/// Empirical coverage of the calibrated intervals on held-out residuals.
template <class Scalar>
CoverageReport<Scalar> coverage_rate(const ResidualMatrix<Scalar>& residuals,
                                     const RadiusModel<Scalar>& model) {
  if (residuals.cols() != model.size())
    throw std::invalid_argument("coverage_rate: width mismatch");
  const Index m = residuals.rows();
  if (m < 1) throw std::invalid_argument("coverage_rate: empty test set");
  CoverageReport<Scalar> out;
  out.per_coefficient.resize(residuals.cols());
  const Vector<Scalar> widths = model.half_widths();
  for (Index j = 0; j < residuals.cols(); ++j) {
    Index covered = 0;
    for (Index i = 0; i < m; ++i)
      if (residuals(i, j) <= widths[j]) ++covered;
    out.per_coefficient[j] = Scalar(covered) / Scalar(m);
  }
  out.mean_coverage = out.per_coefficient.mean();
  out.mean_miscoverage = Scalar(1) - out.mean_coverage;
  return out;
}

}  // namespace chem
