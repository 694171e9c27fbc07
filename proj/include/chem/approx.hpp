#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chem/core.hpp"
#include "chem/rng.hpp"

namespace chem::approx {

using Point = Eigen::Matrix<double, Eigen::Dynamic, 1>;
using FieldFn = std::function<double(const Point&)>;

/// Continuous scene on [-1,1]^d, optionally with a known Lipschitz constant.
struct ScalarField {
  FieldFn eval;
  int dim = 1;
  double lipschitz = -1.0;  // negative when unknown

  double operator()(const Point& x) const { return eval(x); }
};

/// Quadrature / sampling locations inside [-1,1]^d.
struct SampleSet {
  Eigen::MatrixXd points;   // t x d
  Eigen::VectorXd weights;  // empty when the set carries no quadrature rule

  Eigen::Index size() const { return points.rows(); }
  bool has_weights() const { return weights.size() > 0; }
};

inline std::int64_t tensor_size(int m, int d) {
  std::int64_t t = 1;
  for (int i = 0; i < d; ++i) {
    t *= (m + 1);
    if (t > 2'000'000) throw std::invalid_argument("approx: (m+1)^d evaluation budget exceeded");
  }
  return t;
}

/// Orthonormal Legendre value: standard three-term recurrence with the
/// sqrt(n + 1/2) normalization applied last.
inline double legendre_eval_1d(int n, double x) {
  if (n < 0) throw std::invalid_argument("legendre_eval_1d: negative degree");
  double p_prev = 1.0;  // P_0
  double p = x;         // P_1
  if (n == 0) return std::sqrt(0.5);
  for (int k = 1; k < n; ++k) {
    const double p_next = ((2.0 * k + 1.0) * x * p - k * p_prev) / (k + 1.0);
    p_prev = p;
    p = p_next;
  }
  return std::sqrt(n + 0.5) * p;
}

/// Product-basis value for the flat index (last coordinate varies fastest).
inline double legendre_eval(std::int64_t flat, int m, const Point& x) {
  double v = 1.0;
  std::int64_t rest = flat;
  for (int axis = static_cast<int>(x.size()) - 1; axis >= 0; --axis) {
    const int deg = static_cast<int>(rest % (m + 1));
    rest /= (m + 1);
    v *= legendre_eval_1d(deg, x[axis]);
  }
  if (rest != 0) throw std::invalid_argument("legendre_eval: flat index out of range");
  return v;
}

/// (m+1)-point Gauss-Legendre rule on [-1,1], exact through degree 2m+1.
inline void gauss_legendre_rule(int m, std::vector<double>& nodes, std::vector<double>& weights) {
  const int n = m + 1;
  nodes.assign(static_cast<std::size_t>(n), 0.0);
  weights.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p_prev = 1.0, p = x;
      for (int k = 1; k < n; ++k) {
        const double p_next = ((2.0 * k + 1.0) * x * p - k * p_prev) / (k + 1.0);
        p_prev = p;
        p = p_next;
      }
      dp = n * (x * p - p_prev) / (x * x - 1.0);
      const double step = p / dp;
      x -= step;
      if (std::abs(step) < 1e-15) break;
    }
    nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    weights[static_cast<std::size_t>(n - 1 - i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

/// Tensor-product Gauss-Legendre nodes and weights for Pi_m on [-1,1]^d.
inline SampleSet gauss_legendre_nodes(int m, int d) {
  if (m < 0 || d < 1) throw std::invalid_argument("gauss_legendre_nodes: bad m or d");
  const std::int64_t t = tensor_size(m, d);
  std::vector<double> nodes, weights;
  gauss_legendre_rule(m, nodes, weights);
  SampleSet set;
  set.points.resize(t, d);
  set.weights.resize(t);
  for (std::int64_t flat = 0; flat < t; ++flat) {
    std::int64_t rest = flat;
    double w = 1.0;
    for (int axis = d - 1; axis >= 0; --axis) {
      const int k = static_cast<int>(rest % (m + 1));
      rest /= (m + 1);
      set.points(flat, axis) = nodes[static_cast<std::size_t>(k)];
      w *= weights[static_cast<std::size_t>(k)];
    }
    set.weights[flat] = w;
  }
  return set;
}

/// Componentwise samples of f at the set's points, in point order.
inline Eigen::VectorXd sample(const ScalarField& f, const SampleSet& set) {
  Eigen::VectorXd out(set.size());
  for (Eigen::Index i = 0; i < set.size(); ++i) out[i] = f(set.points.row(i).transpose());
  return out;
}

/// Polynomial of coordinate degree <= m in the orthonormal Legendre product
/// basis; the coefficient 2-norm equals the L2 norm of the polynomial.
struct MultiPoly {
  int dim = 1;
  int degree = 0;
  Eigen::VectorXd coeffs;

  double operator()(const Point& x) const {
    if (x.size() != dim) throw std::invalid_argument("MultiPoly: point dimension mismatch");
    // Evaluate every 1D basis value once per axis, then accumulate products.
    Eigen::MatrixXd basis(dim, degree + 1);
    for (int axis = 0; axis < dim; ++axis)
      for (int k = 0; k <= degree; ++k) basis(axis, k) = legendre_eval_1d(k, x[axis]);
    double acc = 0.0;
    for (Eigen::Index flat = 0; flat < coeffs.size(); ++flat) {
      double term = coeffs[flat];
      std::int64_t rest = flat;
      for (int axis = dim - 1; axis >= 0; --axis) {
        term *= basis(axis, static_cast<int>(rest % (degree + 1)));
        rest /= (degree + 1);
      }
      acc += term;
    }
    return acc;
  }

  ScalarField as_field() const {
    MultiPoly copy = *this;
    return ScalarField{[copy](const Point& x) { return copy(x); }, dim, -1.0};
  }
};

/// Coefficients <Q, P_i> of a polynomial in Pi_m, recovered exactly from the
/// tensor Gauss rule (the integrands have degree <= 2m per coordinate).
inline Eigen::VectorXd encode_phi(const FieldFn& poly_in_pi_m, int m, int d) {
  const SampleSet set = gauss_legendre_nodes(m, d);
  const std::int64_t t = set.size();
  Eigen::VectorXd values(t);
  for (std::int64_t i = 0; i < t; ++i) values[i] = poly_in_pi_m(set.points.row(i).transpose());
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(t);
  for (std::int64_t i = 0; i < t; ++i) {
    const Point xi = set.points.row(i).transpose();
    const double wv = set.weights[i] * values[i];
    for (std::int64_t k = 0; k < t; ++k) coeffs[k] += wv * legendre_eval(k, m, xi);
  }
  return coeffs;
}

inline Eigen::VectorXd encode_phi(const MultiPoly& q) {
  return encode_phi([&q](const Point& x) { return q(x); }, q.degree, q.dim);
}

/// Basis expansion evaluated at the sample points.
inline Eigen::VectorXd decode_phi(const Eigen::VectorXd& coeffs, int m, const SampleSet& set) {
  const int d = static_cast<int>(set.points.cols());
  if (coeffs.size() != tensor_size(m, d))
    throw std::invalid_argument("decode_phi: coefficient length mismatch");
  MultiPoly poly{d, m, coeffs};
  Eigen::VectorXd out(set.size());
  for (Eigen::Index i = 0; i < set.size(); ++i) out[i] = poly(set.points.row(i).transpose());
  return out;
}

/// Tensor Bernstein projector on [-1,1]^d: reproduces constants and affine
/// maps, has sup-norm one, and approximates within (5d/4) omega_f(2/m).
class BernsteinProjection {
 public:
  BernsteinProjection(const ScalarField& f, int m, int d) : m_(m), d_(d) {
    if (m < 1 || d < 1) throw std::invalid_argument("bernstein_project: need m >= 1, d >= 1");
    const std::int64_t t = tensor_size(m, d);
    grid_values_.resize(t);
    Point x(d);
    for (std::int64_t flat = 0; flat < t; ++flat) {
      std::int64_t rest = flat;
      for (int axis = d - 1; axis >= 0; --axis) {
        const int k = static_cast<int>(rest % (m + 1));
        rest /= (m + 1);
        x[axis] = (2.0 * k - m) / static_cast<double>(m);
      }
      grid_values_[flat] = f(x);
    }
    binomials_.resize(static_cast<std::size_t>(m + 1));
    binomials_[0] = 1.0;
    for (int k = 1; k <= m; ++k)
      binomials_[static_cast<std::size_t>(k)] =
          binomials_[static_cast<std::size_t>(k - 1)] * (m - k + 1) / k;
  }

  double operator()(const Point& z) const {
    if (z.size() != d_) throw std::invalid_argument("BernsteinProjection: dimension mismatch");
    Eigen::MatrixXd basis(d_, m_ + 1);
    for (int axis = 0; axis < d_; ++axis) {
      const double p = (z[axis] + 1.0) / 2.0;
      const double q = (1.0 - z[axis]) / 2.0;
      for (int k = 0; k <= m_; ++k)
        basis(axis, k) = binomials_[static_cast<std::size_t>(k)] * std::pow(p, k) *
                         std::pow(q, m_ - k);
    }
    double acc = 0.0;
    for (std::int64_t flat = 0; flat < static_cast<std::int64_t>(grid_values_.size()); ++flat) {
      double term = grid_values_[static_cast<std::size_t>(flat)];
      std::int64_t rest = flat;
      for (int axis = d_ - 1; axis >= 0; --axis) {
        term *= basis(axis, static_cast<int>(rest % (m_ + 1)));
        rest /= (m_ + 1);
      }
      acc += term;
    }
    return acc;
  }

  ScalarField as_field() const {
    BernsteinProjection copy = *this;
    return ScalarField{[copy](const Point& x) { return copy(x); }, d_, -1.0};
  }

  /// Exact Legendre coefficients of the projected polynomial.
  MultiPoly to_legendre() const {
    return MultiPoly{d_, m_, encode_phi([this](const Point& x) { return (*this)(x); }, m_, d_)};
  }

  int degree() const { return m_; }
  int dim() const { return d_; }

 private:
  int m_, d_;
  std::vector<double> grid_values_;
  std::vector<double> binomials_;
};

inline BernsteinProjection bernstein_project(const ScalarField& f, int m, int d) {
  return BernsteinProjection(f, m, d);
}

/// Lower-bound estimate of the modulus of continuity at each radius in
/// `radii` (ascending), from one shared pool of random pairs. Monotone in r
/// by construction.
inline std::vector<double> modulus_of_continuity(const ScalarField& f, int d,
                                                 const std::vector<double>& radii,
                                                 std::int64_t pair_budget, std::uint64_t seed) {
  if (radii.empty()) return {};
  for (double r : radii)
    if (!(r > 0.0)) throw std::invalid_argument("modulus_of_continuity: radii must be positive");
  if (!std::is_sorted(radii.begin(), radii.end()))
    throw std::invalid_argument("modulus_of_continuity: radii must be ascending");
  const double r_max = radii.back();
  Rng rng(seed);
  std::vector<std::pair<double, double>> samples;  // (distance, |df|)
  samples.reserve(static_cast<std::size_t>(pair_budget));
  Point x1(d), x2(d), dir(d);
  for (std::int64_t i = 0; i < pair_budget; ++i) {
    for (int a = 0; a < d; ++a) x1[a] = rng.uniform(-1.0, 1.0);
    double norm = 0.0;
    do {
      for (int a = 0; a < d; ++a) dir[a] = rng.normal();
      norm = dir.norm();
    } while (norm < 1e-12);
    const double u = rng.uniform() * r_max;
    for (int a = 0; a < d; ++a) x2[a] = std::clamp(x1[a] + u * dir[a] / norm, -1.0, 1.0);
    const double dist = (x1 - x2).norm();
    if (dist <= 0.0) continue;
    samples.emplace_back(dist, std::abs(f(x1) - f(x2)));
  }
  std::sort(samples.begin(), samples.end());
  std::vector<double> out(radii.size(), 0.0);
  double running = 0.0;
  std::size_t s = 0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    while (s < samples.size() && samples[s].first <= radii[i]) {
      running = std::max(running, samples[s].second);
      ++s;
    }
    out[i] = running;
  }
  return out;
}

inline double modulus_of_continuity(const ScalarField& f, int d, double r,
                                    std::int64_t pair_budget, std::uint64_t seed) {
  return modulus_of_continuity(f, d, std::vector<double>{r}, pair_budget, seed)[0];
}

/// Field-to-field surrogate with the Lipschitz constants the error bound
/// needs made explicit.
struct SurrogateOperator {
  std::function<ScalarField(const ScalarField&)> apply;
  double lipschitz = 1.0;          // operator constant
  double output_lipschitz = 1.0;   // spatial constant of outputs
  std::string name;
};

struct SweepRow {
  int m = 0;
  double error = 0.0;   // sup |M(f) - V_m M V_m f| on the probe grid
  double bound = 0.0;   // 6 L_M d^2 omega_f(2/m) + 5 L_Y d / (2m)
  double omega = 0.0;   // modulus value used in the bound
};

inline Eigen::MatrixXd probe_grid(int d, int per_axis) {
  std::int64_t t = 1;
  for (int i = 0; i < d; ++i) t *= per_axis;
  Eigen::MatrixXd grid(t, d);
  for (std::int64_t flat = 0; flat < t; ++flat) {
    std::int64_t rest = flat;
    for (int axis = d - 1; axis >= 0; --axis) {
      const int k = static_cast<int>(rest % per_axis);
      rest /= per_axis;
      grid(flat, axis) = -1.0 + 2.0 * k / (per_axis - 1.0);
    }
  }
  return grid;
}

/// Measures the discretization error of pushing a surrogate operator through
/// the degree-m projector on both sides, against the explicit bound.
inline std::vector<SweepRow> discretization_error_sweep(
    const SurrogateOperator& op, const ScalarField& f,
    const std::function<double(double)>& omega_f, const std::vector<int>& ms, int d,
    int grid_per_axis) {
  const Eigen::MatrixXd grid = probe_grid(d, grid_per_axis);
  const ScalarField mf = op.apply(f);
  Eigen::VectorXd reference(grid.rows());
  for (Eigen::Index i = 0; i < grid.rows(); ++i) reference[i] = mf(grid.row(i).transpose());

  std::vector<SweepRow> rows;
  for (int m : ms) {
    const ScalarField inner = bernstein_project(f, m, d).as_field();
    const ScalarField mapped = op.apply(inner);
    const BernsteinProjection outer = bernstein_project(mapped, m, d);
    double err = 0.0;
    for (Eigen::Index i = 0; i < grid.rows(); ++i)
      err = std::max(err, std::abs(reference[i] - outer(grid.row(i).transpose())));
    SweepRow row;
    row.m = m;
    row.omega = omega_f(2.0 / m);
    row.error = err;
    row.bound = 6.0 * op.lipschitz * d * d * row.omega +
                5.0 * op.output_lipschitz * d / (2.0 * m);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace chem::approx
