#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "chem/evaluate.hpp"
#include "serialize.hpp"

namespace chem {

/// In-memory view of a dataset directory.
struct LoadedDataset {
  Manifest manifest;
  std::vector<DatasetPair<double>> pairs;
  NormalizationConstants<double> norm;
};

/// Generates the dataset and writes rasters plus the manifest. Deterministic
/// for a fixed config: rerunning produces byte-identical files.
Manifest cmd_synth(const RunConfig& cfg, const std::filesystem::path& out_dir);

LoadedDataset load_dataset(const std::filesystem::path& dir);

/// Splits the dataset per the config, calibrates the model, writes the
/// sidecar pair (JSON + binary) and returns the sidecar.
CalibrationSidecar cmd_calibrate(const RunConfig& cfg, const std::filesystem::path& dataset_dir,
                                 const std::filesystem::path& out_json);

struct EvaluateOutput {
  EvalResult<double> result;
  std::filesystem::path report_path;
};

/// Scores the test split against a stored calibration. Refuses to run when
/// the sidecar's transform hash disagrees with the config.
EvaluateOutput cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& dataset_dir,
                            const std::filesystem::path& calibration_json,
                            const std::filesystem::path& out_dir, bool write_maps = false,
                            bool write_scores = false);

/// Degradation-width sweep at a calibration fit on the nominal width.
std::vector<SweepRecord<double>> cmd_sweep(const RunConfig& cfg,
                                           const std::vector<double>& fwhms,
                                           const std::filesystem::path& out_csv);

/// Polynomial-projection error sweep; writes `m,error,bound,omega_f` rows.
void cmd_theory_sweep(const std::vector<int>& ms, const std::filesystem::path& out_csv);

}  // namespace chem
