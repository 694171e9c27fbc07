#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chem/core.hpp"
#include "chem/shearlet.hpp"
#include "chem/subband.hpp"
#include "chem/wavelet.hpp"

namespace chem {

enum class TransformKind { wavelet, shearlet };

struct TransformConfig {
  TransformKind kind = TransformKind::wavelet;
  std::string wavelet_family = "db8";
  int wavelet_levels = 4;
  ShearletSpec shearlet;
  bool normalize = true;

  std::string canonical_string() const {
    std::ostringstream os;
    if (kind == TransformKind::wavelet)
      os << "wavelet:" << wavelet_family << ":levels=" << wavelet_levels;
    else
      os << shearlet.canonical_string();
    os << ":normalize=" << (normalize ? 1 : 0);
    return os.str();
  }
};

/// Texture extraction front-end: forward/inverse transform plus the optional
/// per-subband RMS normalization. The RMS constants are fit once on a
/// reference set and then applied to every field this object produces, so
/// calibration and evaluation see identically scaled coefficients.
template <class Scalar>
class TextureTransform {
 public:
  explicit TextureTransform(TransformConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.kind == TransformKind::wavelet)
      wavelet_ = WaveletSpec<Scalar>::make(cfg_.wavelet_family);
    else
      cfg_.shearlet.validate();
  }

  const TransformConfig& config() const { return cfg_; }

  SubbandLayout layout(Index rows, Index cols) const {
    if (cfg_.kind == TransformKind::wavelet)
      return make_wavelet_layout(wavelet_.family, cfg_.wavelet_levels, rows, cols);
    return shearlet_system(rows, cols).layout();
  }

  CoefficientField<Scalar> forward_raw(const Image<Scalar>& img) const {
    if (cfg_.kind == TransformKind::wavelet)
      return dwt_forward(img, wavelet_, cfg_.wavelet_levels);
    return shearlet_forward(img, shearlet_system(img.rows(), img.cols()));
  }

  /// Forward transform with the fitted normalization applied (when enabled).
  CoefficientField<Scalar> forward(const Image<Scalar>& img) const {
    CoefficientField<Scalar> field = forward_raw(img);
    if (cfg_.normalize) {
      if (!rms_) throw std::logic_error("TextureTransform: normalization not fitted");
      return rms_->apply(field);
    }
    return field;
  }

  /// Inverse transform; normalized fields are rescaled back first.
  Image<Scalar> inverse(const CoefficientField<Scalar>& field) const {
    const CoefficientField<Scalar> raw =
        field.state == NormState::raw ? field : SubbandRms<Scalar>::remove(field);
    if (cfg_.kind == TransformKind::wavelet) return dwt_inverse(raw, wavelet_);
    return shearlet_inverse(raw, shearlet_system(raw.layout.image_rows(), raw.layout.image_cols()));
  }

  template <class ImageRange>
  void fit_normalization(const ImageRange& reference_images) {
    if (!cfg_.normalize) return;
    std::vector<CoefficientField<Scalar>> fields;
    for (const auto& img : reference_images) fields.push_back(forward_raw(img));
    rms_ = SubbandRms<Scalar>::fit(fields);
  }

  void set_normalization(SubbandRms<Scalar> rms) { rms_ = std::move(rms); }
  const std::optional<SubbandRms<Scalar>>& normalization() const { return rms_; }
  bool needs_fit() const { return cfg_.normalize && !rms_; }

  const WaveletSpec<Scalar>& wavelet() const { return wavelet_; }

  const ShearletSystem<Scalar>& shearlet_system(Index rows, Index cols) const {
    if (rows != cols) throw std::invalid_argument("shearlet transform requires a square image");
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = shear_cache_.find(rows);
    if (it == shear_cache_.end())
      it = shear_cache_.emplace(rows, std::make_shared<ShearletSystem<Scalar>>(cfg_.shearlet, rows))
               .first;
    return *it->second;
  }

  Image<Scalar> reconstruct_filtered(const CoefficientField<Scalar>& field,
                                     const std::function<bool(Index)>& keep) const {
    const CoefficientField<Scalar> raw =
        field.state == NormState::raw ? field : SubbandRms<Scalar>::remove(field);
    if (cfg_.kind == TransformKind::wavelet)
      return chem::reconstruct_filtered(raw, keep, wavelet_);
    return chem::reconstruct_filtered(
        raw, keep, shearlet_system(raw.layout.image_rows(), raw.layout.image_cols()));
  }

 private:
  TransformConfig cfg_;
  WaveletSpec<Scalar> wavelet_;
  std::optional<SubbandRms<Scalar>> rms_;
  mutable std::mutex cache_mutex_;
  mutable std::map<Index, std::shared_ptr<ShearletSystem<Scalar>>> shear_cache_;
};

}  // namespace chem
