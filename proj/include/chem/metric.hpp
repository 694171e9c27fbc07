#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chem/conformal.hpp"
#include "chem/core.hpp"
#include "chem/subband.hpp"
#include "chem/transform.hpp"

namespace chem {

/// Capped positive excess of the residual over the interval radius:
/// min((|pred - truth| - radius)_+, theta), elementwise.
template <class Scalar>
Vector<Scalar> chem_per_coefficient(const CoefficientField<Scalar>& prediction_hat,
                                    const CoefficientField<Scalar>& truth_hat,
                                    const Vector<Scalar>& radii, Scalar theta) {
  prediction_hat.check_consistent();
  truth_hat.check_consistent();
  if (!prediction_hat.layout.same_shape(truth_hat.layout))
    throw std::invalid_argument("chem_per_coefficient: layout mismatch");
  if (prediction_hat.state != truth_hat.state)
    throw std::invalid_argument("chem_per_coefficient: normalization state mismatch");
  if (radii.size() != prediction_hat.values.size())
    throw std::invalid_argument("chem_per_coefficient: radii size mismatch");
  if (!(theta > Scalar(0))) throw std::invalid_argument("chem_per_coefficient: theta must be > 0");
  return ((prediction_hat.values - truth_hat.values).abs() - radii)
      .max(Scalar(0))
      .min(theta);
}

enum class StdMode : std::uint8_t { across_coefficients, per_coefficient };

template <class Scalar>
struct ChemReport {
  Scalar theta = Scalar(1);
  Scalar alpha = Scalar(0.01);
  Index sample_count = 0;
  Vector<Scalar> per_coefficient;      // mean capped score per coefficient
  Scalar aggregate = Scalar(0);        // mean over coefficients
  Vector<Scalar> per_coefficient_std;  // std over samples, per coefficient
  Vector<Scalar> standardized;         // (H_j - mean) / sigma
  StdMode std_mode = StdMode::across_coefficients;
  Scalar std_sigma = Scalar(0);        // sigma used by across_coefficients mode
  bool degenerate_std = false;         // all scores equal; standardized forced to 0
  Scalar hoeffding_delta = Scalar(0.05);
  Scalar hoeffding_half_width_value = Scalar(0);
};

/// Streaming accumulator over per-image score vectors; keeps first and
/// second moments per coefficient so the optional full score matrix never
/// has to be materialized. Summation order is the caller's visit order.
template <class Scalar>
class ChemAccumulator {
 public:
  explicit ChemAccumulator(Index coefficients)
      : sum_(Vector<Scalar>::Zero(coefficients)), sumsq_(Vector<Scalar>::Zero(coefficients)) {}

  void add(const Vector<Scalar>& scores) {
    if (scores.size() != sum_.size())
      throw std::invalid_argument("ChemAccumulator: score width mismatch");
    sum_ += scores;
    sumsq_ += scores.square();
    ++count_;
  }

  Index count() const { return count_; }

  Vector<Scalar> mean() const {
    if (count_ < 1) throw std::logic_error("ChemAccumulator: no samples");
    return sum_ / Scalar(count_);
  }

  Vector<Scalar> std_per_coefficient() const {
    const Vector<Scalar> m = mean();
    return (sumsq_ / Scalar(count_) - m.square()).max(Scalar(0)).sqrt();
  }

 private:
  Vector<Scalar> sum_, sumsq_;
  Index count_ = 0;
};

template <class Scalar>
Scalar hoeffding_half_width(Scalar theta, Scalar delta, Index samples) {
  if (!(theta > Scalar(0)) && theta != Scalar(0))
    throw std::invalid_argument("hoeffding_half_width: theta must be >= 0");
  if (!(delta > Scalar(0) && delta < Scalar(1)))
    throw std::invalid_argument("hoeffding_half_width: delta must be in (0,1)");
  if (samples < 1) throw std::invalid_argument("hoeffding_half_width: need samples >= 1");
  return theta * std::sqrt(std::log(Scalar(2) / delta) / (Scalar(2) * Scalar(samples)));
}

/// Samples needed to push the half-width at (theta, delta) below a target.
template <class Scalar>
Index hoeffding_min_samples(Scalar theta, Scalar delta, Scalar half_width) {
  if (!(half_width > Scalar(0)))
    throw std::invalid_argument("hoeffding_min_samples: target must be positive");
  const Scalar m = theta * theta * std::log(Scalar(2) / delta) /
                   (Scalar(2) * half_width * half_width);
  return static_cast<Index>(std::ceil(static_cast<double>(m)));
}

/// Mean-zero scores. Default divides by the population std across
/// coefficients of the per-coefficient means; the alternative divides each
/// coefficient by its own std across samples.
template <class Scalar>
void standardize_scores(ChemReport<Scalar>& report, StdMode mode = StdMode::across_coefficients) {
  const Vector<Scalar>& h = report.per_coefficient;
  const Scalar mean = h.mean();
  report.std_mode = mode;
  report.degenerate_std = false;
  if (mode == StdMode::across_coefficients) {
    const Scalar sigma = std::sqrt((h - mean).square().mean());
    report.std_sigma = sigma;
    if (sigma <= Scalar(0)) {
      report.standardized = Vector<Scalar>::Zero(h.size());
      report.degenerate_std = true;
    } else {
      report.standardized = (h - mean) / sigma;
    }
    return;
  }
  if (report.per_coefficient_std.size() != h.size())
    throw std::logic_error("standardize_scores: per-coefficient stds unavailable");
  report.standardized.resize(h.size());
  bool any_degenerate = false;
  for (Index j = 0; j < h.size(); ++j) {
    const Scalar s = report.per_coefficient_std[j];
    if (s <= Scalar(0)) {
      report.standardized[j] = Scalar(0);
      any_degenerate = true;
    } else {
      report.standardized[j] = (h[j] - mean) / s;
    }
  }
  report.degenerate_std = any_degenerate;
}

template <class Scalar>
ChemReport<Scalar> chem_aggregate(const ChemAccumulator<Scalar>& acc, Scalar theta, Scalar alpha,
                                  Scalar delta = Scalar(0.05)) {
  if (acc.count() < 1) throw std::invalid_argument("chem_aggregate: no samples");
  ChemReport<Scalar> report;
  report.theta = theta;
  report.alpha = alpha;
  report.sample_count = acc.count();
  report.per_coefficient = acc.mean();
  report.aggregate = report.per_coefficient.mean();
  report.per_coefficient_std = acc.std_per_coefficient();
  report.hoeffding_delta = delta;
  report.hoeffding_half_width_value = hoeffding_half_width(theta, delta, acc.count());
  standardize_scores(report);
  return report;
}

template <class Scalar>
ChemReport<Scalar> chem_aggregate(const std::vector<Vector<Scalar>>& per_image_scores,
                                  Scalar theta, Scalar alpha, Scalar delta = Scalar(0.05)) {
  if (per_image_scores.empty()) throw std::invalid_argument("chem_aggregate: no samples");
  ChemAccumulator<Scalar> acc(per_image_scores.front().size());
  for (const auto& s : per_image_scores) acc.add(s);
  return chem_aggregate(acc, theta, alpha, delta);
}

/// Mean score per detail scale, finest (scale 1) first.
template <class Scalar>
std::vector<Scalar> chem_per_scale(const Vector<Scalar>& per_coefficient,
                                   const SubbandLayout& layout) {
  std::vector<Scalar> sums(static_cast<std::size_t>(layout.levels()), Scalar(0));
  std::vector<Index> counts(static_cast<std::size_t>(layout.levels()), 0);
  for (std::size_t b = 0; b < layout.band_count(); ++b) {
    const auto& rec = layout.band(b);
    if (rec.is_approx) continue;
    const std::size_t s = static_cast<std::size_t>(rec.scale - 1);
    sums[s] += per_coefficient.segment(rec.offset, rec.size()).sum();
    counts[s] += rec.size();
  }
  std::vector<Scalar> out(sums.size());
  for (std::size_t s = 0; s < sums.size(); ++s)
    out[s] = counts[s] > 0 ? sums[s] / Scalar(counts[s]) : Scalar(0);
  return out;
}

/// Keeps coefficients whose standardized score clears the threshold within
/// the `scale_count` finest detail scales, zeroes the rest, and inverts.
template <class Scalar>
Image<Scalar> hallucination_map(const CoefficientField<Scalar>& source_field,
                                const Vector<Scalar>& standardized, const SubbandLayout& layout,
                                const TextureTransform<Scalar>& transform, int scale_count = 2,
                                Scalar threshold = Scalar(0.5)) {
  if (standardized.size() != layout.total_size())
    throw std::invalid_argument("hallucination_map: score/layout size mismatch");
  auto keep = [&](Index j) {
    const auto& rec = layout.band(layout.band_of(j));
    return !rec.is_approx && rec.scale <= scale_count && standardized[j] > threshold;
  };
  return transform.reconstruct_filtered(source_field, keep);
}

}  // namespace chem
