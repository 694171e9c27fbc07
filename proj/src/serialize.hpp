#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "chem/conformal.hpp"
#include "chem/evaluate.hpp"
#include "chem/metric.hpp"
#include "chem/scene.hpp"
#include "chem/subband.hpp"
#include "chem/transform.hpp"

namespace chem {

using Json = nlohmann::json;

/// Full description of a pipeline run; loadable from one JSON file with CLI
/// overrides applied on top.
struct RunConfig {
  TransformConfig transform;
  std::string model = "tikhonov:sure";
  double alpha = 0.01;
  double theta = 1.0;
  double delta = 0.05;
  int d1 = 0;
  int d2 = 0;
  int test = 0;
  SceneConfig<double> scene;
  double fwhm = 15.0;
  double noise_sigma = -1.0;  // negative = derive from the faintest source
  std::string g_family = "multiplicative";
  double bound_lo = 0.0;
  double bound_hi = 1e6;
  int map_scales = 2;
  double map_threshold = 0.5;
  std::string std_mode = "across_coefficients";  // or "per_coefficient"
  unsigned workers = 0;

  int total_samples() const { return d1 + d2 + test; }
  void validate() const;
  Json to_json() const;
  static RunConfig from_json(const Json& j);
  std::string config_hash() const;
  std::string transform_hash() const;
};

Json transform_config_to_json(const TransformConfig& cfg);
TransformConfig transform_config_from_json(const Json& j);

Json scene_config_to_json(const SceneConfig<double>& cfg);
SceneConfig<double> scene_config_from_json(const Json& j);

struct ManifestEntry {
  std::string degraded_path;  // relative to the dataset directory
  std::string truth_path;
  std::uint64_t seed = 0;
  double min_peak_snr = 0.0;
};

struct Manifest {
  std::string config_hash;
  int count = 0;
  double fwhm = 0.0;
  double noise_sigma = 0.0;
  double norm_offset = 0.0;
  double norm_scale = 1.0;
  double min_peak_snr = 0.0;
  double max_peak_snr = 0.0;
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> entries;
};

void write_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& path);

/// Calibration sidecar: a JSON header plus a flat binary of r_hat followed by
/// lambda (little-endian doubles), reusable across runs.
struct CalibrationSidecar {
  CalibrationResult<double> result;
  std::string transform_hash;
  std::string model_id;
  Json rms;  // per-band constants when normalization is enabled, else null
  std::vector<std::string> warnings;
};

void write_calibration(const std::filesystem::path& json_path, const CalibrationSidecar& sidecar);
CalibrationSidecar read_calibration(const std::filesystem::path& json_path);

void write_report(const std::filesystem::path& path, const EvalResult<double>& result,
                  const std::string& model_id, const std::string& config_hash,
                  const std::string& transform_hash, double delta);

void write_sweep_csv(const std::filesystem::path& path,
                     const std::vector<SweepRecord<double>>& rows);

std::string dump_json(const Json& j);

}  // namespace chem
