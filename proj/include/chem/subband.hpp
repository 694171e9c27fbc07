#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chem/core.hpp"

namespace chem {

/// One (scale, orientation) block of a flattened coefficient vector.
/// Scale 1 is the finest; the approximation block carries the coarsest scale.
struct SubbandRecord {
  int scale = 0;
  std::string orientation;    // "approx", "LH"/"HL"/"HH", or a shear label
  double angle_deg = -1.0;    // spatial feature orientation; < 0 when not directional
  Index offset = 0;
  Index rows = 0;
  Index cols = 0;
  bool is_approx = false;

  Index size() const { return rows * cols; }
};

/// Bookkeeping for how subbands tile the flattened coefficient vector.
class SubbandLayout {
 public:
  SubbandLayout() = default;
  SubbandLayout(std::string transform_id, int levels, Index image_rows, Index image_cols,
                std::vector<SubbandRecord> bands)
      : transform_id_(std::move(transform_id)),
        levels_(levels),
        image_rows_(image_rows),
        image_cols_(image_cols),
        bands_(std::move(bands)) {
    validate();
  }

  const std::string& transform_id() const { return transform_id_; }
  int levels() const { return levels_; }
  Index image_rows() const { return image_rows_; }
  Index image_cols() const { return image_cols_; }
  const std::vector<SubbandRecord>& bands() const { return bands_; }
  Index total_size() const { return total_; }

  const SubbandRecord& band(std::size_t i) const { return bands_.at(i); }
  std::size_t band_count() const { return bands_.size(); }

  /// Index of the subband containing flat coefficient `j`.
  std::size_t band_of(Index j) const {
    if (j < 0 || j >= total_) throw std::out_of_range("band_of: index outside layout");
    std::size_t lo = 0, hi = bands_.size();
    while (hi - lo > 1) {
      std::size_t mid = (lo + hi) / 2;
      if (bands_[mid].offset <= j)
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  }

  bool same_shape(const SubbandLayout& other) const {
    if (transform_id_ != other.transform_id_ || bands_.size() != other.bands_.size())
      return false;
    for (std::size_t i = 0; i < bands_.size(); ++i) {
      const auto& a = bands_[i];
      const auto& b = other.bands_[i];
      if (a.offset != b.offset || a.rows != b.rows || a.cols != b.cols || a.scale != b.scale ||
          a.orientation != b.orientation)
        return false;
    }
    return true;
  }

  std::string canonical_string() const {
    std::ostringstream os;
    os << transform_id_ << "|levels=" << levels_ << "|" << image_rows_ << "x" << image_cols_;
    for (const auto& b : bands_)
      os << "|" << b.scale << ":" << b.orientation << ":" << b.offset << ":" << b.rows << "x"
         << b.cols;
    return os.str();
  }

 private:
  void validate() {
    if (bands_.empty()) throw std::invalid_argument("SubbandLayout: no subbands");
    Index expect = 0;
    int approx_count = 0;
    for (const auto& b : bands_) {
      if (b.offset != expect)
        throw std::invalid_argument("SubbandLayout: subbands must tile without gaps");
      if (b.rows < 1 || b.cols < 1) throw std::invalid_argument("SubbandLayout: empty subband");
      expect += b.size();
      approx_count += b.is_approx ? 1 : 0;
    }
    if (approx_count != 1)
      throw std::invalid_argument("SubbandLayout: exactly one approximation subband required");
    total_ = expect;
  }

  std::string transform_id_;
  int levels_ = 0;
  Index image_rows_ = 0;
  Index image_cols_ = 0;
  std::vector<SubbandRecord> bands_;
  Index total_ = 0;
};

enum class NormState : std::uint8_t { raw, subband_rms };

/// Flattened transform coefficients plus their layout. When normalized, the
/// per-subband RMS divisors are kept so the scaling can be undone exactly.
template <class Scalar>
struct CoefficientField {
  SubbandLayout layout;
  Vector<Scalar> values;
  NormState state = NormState::raw;
  Vector<Scalar> band_rms;             // one entry per subband when normalized
  std::vector<std::uint8_t> rms_guarded;  // per-subband epsilon-guard flags

  void check_consistent() const {
    if (values.size() != layout.total_size())
      throw std::invalid_argument("CoefficientField: values/layout size mismatch");
  }
};

/// Per-subband RMS divisors with a fit/apply split: fit on a reference set,
/// then apply the stored constants to any field with the same layout.
template <class Scalar>
class SubbandRms {
 public:
  static constexpr Scalar kEpsilon = Scalar(1e-12);

  SubbandRms() = default;

  template <class FieldRange>
  static SubbandRms fit(const FieldRange& fields) {
    auto it = std::begin(fields);
    if (it == std::end(fields)) throw std::invalid_argument("SubbandRms::fit: empty reference set");
    const SubbandLayout& layout = it->layout;
    const std::size_t nb = layout.band_count();
    Vector<Scalar> sumsq = Vector<Scalar>::Zero(static_cast<Index>(nb));
    Vector<Scalar> counts = Vector<Scalar>::Zero(static_cast<Index>(nb));
    for (const auto& f : fields) {
      if (!f.layout.same_shape(layout))
        throw std::invalid_argument("SubbandRms::fit: mixed layouts");
      if (f.state != NormState::raw)
        throw std::invalid_argument("SubbandRms::fit: reference fields must be raw");
      for (std::size_t b = 0; b < nb; ++b) {
        const auto& rec = layout.band(b);
        sumsq[static_cast<Index>(b)] +=
            f.values.segment(rec.offset, rec.size()).square().sum();
        counts[static_cast<Index>(b)] += static_cast<Scalar>(rec.size());
      }
    }
    SubbandRms out;
    out.rms_ = (sumsq / counts).sqrt();
    out.guarded_.assign(nb, 0);
    for (std::size_t b = 0; b < nb; ++b)
      if (out.rms_[static_cast<Index>(b)] < kEpsilon) out.guarded_[b] = 1;
    return out;
  }

  static SubbandRms from_values(Vector<Scalar> rms, std::vector<std::uint8_t> guarded) {
    SubbandRms out;
    out.rms_ = std::move(rms);
    out.guarded_ = std::move(guarded);
    return out;
  }

  const Vector<Scalar>& rms() const { return rms_; }
  const std::vector<std::uint8_t>& guarded() const { return guarded_; }
  bool empty() const { return rms_.size() == 0; }

  CoefficientField<Scalar> apply(const CoefficientField<Scalar>& field) const {
    if (field.state == NormState::subband_rms) {
      // Re-applying the constants a field already carries is a no-op.
      if (field.band_rms.size() == rms_.size() &&
          ((field.band_rms - rms_).abs() <= Scalar(0)).all())
        return field;
      throw std::invalid_argument("SubbandRms::apply: field normalized with other constants");
    }
    CoefficientField<Scalar> out = field;
    scale_bands(out, /*forward=*/true);
    out.state = NormState::subband_rms;
    out.band_rms = rms_;
    out.rms_guarded = guarded_;
    return out;
  }

  static CoefficientField<Scalar> remove(const CoefficientField<Scalar>& field) {
    if (field.state == NormState::raw) return field;
    SubbandRms undo;
    undo.rms_ = field.band_rms;
    undo.guarded_ = field.rms_guarded;
    CoefficientField<Scalar> out = field;
    undo.scale_bands(out, /*forward=*/false);
    out.state = NormState::raw;
    out.band_rms.resize(0);
    out.rms_guarded.clear();
    return out;
  }

 private:
  void scale_bands(CoefficientField<Scalar>& field, bool forward) const {
    const std::size_t nb = field.layout.band_count();
    if (static_cast<std::size_t>(rms_.size()) != nb)
      throw std::invalid_argument("SubbandRms: band count mismatch");
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& rec = field.layout.band(b);
      const Scalar divisor = std::max(rms_[static_cast<Index>(b)], kEpsilon);
      auto seg = field.values.segment(rec.offset, rec.size());
      if (forward)
        seg /= divisor;
      else
        seg *= divisor;
    }
  }

  Vector<Scalar> rms_;
  std::vector<std::uint8_t> guarded_;
};

/// Fits the RMS constants on the field itself and applies them.
template <class Scalar>
CoefficientField<Scalar> subband_rms_normalize(const CoefficientField<Scalar>& field) {
  if (field.state == NormState::subband_rms) return field;
  std::vector<CoefficientField<Scalar>> one{field};
  return SubbandRms<Scalar>::fit(one).apply(field);
}

}  // namespace chem
