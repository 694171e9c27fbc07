#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pipeline.hpp"
#include "raster_io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitHashMismatch = 4;

chem::RunConfig load_config(const std::string& config_path) {
  if (config_path.empty()) return {};
  const std::string bytes = chem::read_file_bytes(config_path);
  auto j = chem::Json::parse(bytes, nullptr, false);
  if (j.is_discarded()) throw chem::DataError("invalid config JSON: " + config_path);
  return chem::RunConfig::from_json(j);
}

fs::path resolve_out(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* root = std::getenv("CHEM_OUT_ROOT")) return root;
  return ".";
}

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    const std::size_t comma = csv.find(',', pos);
    out.push_back(std::stod(csv.substr(pos, comma - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal hallucination estimation pipelines"};
  app.require_subcommand(1);

  std::string config_path, dataset_dir, calibration_path, out_path;
  std::string fwhm_list = "10,15,20,25";
  std::string m_list = "2,4,8,16,32";
  bool maps = false;
  bool scores = false;

  // Flags shared across subcommands; each mirrors a RunConfig field.
  double alpha = -1, theta = -1, delta = -1, fwhm = -1, noise_sigma = -2;
  int d1 = -1, d2 = -1, ntest = -1, side = -1, levels = -1;
  std::string model, family, kind, std_mode;
  int normalize = -1;
  unsigned workers = 0;
  unsigned long long seed_flag = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--alpha", alpha, "miscoverage level");
    cmd->add_option("--theta", theta, "score cap");
    cmd->add_option("--delta", delta, "confidence for the sample bound");
    cmd->add_option("--model", model, "reconstructor id");
    cmd->add_option("--d1", d1, "radius-initialization split size");
    cmd->add_option("--d2", d2, "calibration split size");
    cmd->add_option("--test", ntest, "test split size");
    cmd->add_option("--side", side, "image side in pixels");
    cmd->add_option("--fwhm", fwhm, "nominal PSF width");
    cmd->add_option("--noise-sigma", noise_sigma,
                    "noise level; negative derives it from the faintest source");
    cmd->add_option("--transform", kind, "wavelet|shearlet");
    cmd->add_option("--family", family, "wavelet family (haar|db4|db8)");
    cmd->add_option("--levels", levels, "wavelet decomposition depth");
    cmd->add_option("--normalize", normalize, "per-subband RMS normalization (0|1)");
    cmd->add_option("--std-mode", std_mode,
                    "score standardization: across_coefficients|per_coefficient");
    cmd->add_option("--workers", workers, "worker pool size (0 = automatic)");
    cmd->add_option("--seed", seed_flag, "scene RNG seed")->each([&](const std::string&) {
      seed_set = true;
    });
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a dataset with a manifest");
  add_common(synth);
  synth->add_option("--out", out_path, "dataset directory");

  CLI::App* calibrate = app.add_subcommand("calibrate", "fit interval radii on a dataset");
  add_common(calibrate);
  calibrate->add_option("--dataset", dataset_dir, "dataset directory")->required();
  calibrate->add_option("--out", out_path, "sidecar JSON path");

  CLI::App* evaluate = app.add_subcommand("evaluate", "score a model against a calibration");
  add_common(evaluate);
  evaluate->add_option("--dataset", dataset_dir, "dataset directory")->required();
  evaluate->add_option("--calibration", calibration_path, "calibration sidecar JSON")->required();
  evaluate->add_option("--out", out_path, "output directory");
  evaluate->add_flag("--maps", maps, "write hallucination-map rasters");
  evaluate->add_flag("--scores", scores, "write the per-image score matrix");

  CLI::App* sweep = app.add_subcommand("sweep", "degradation-width sweep to CSV");
  add_common(sweep);
  sweep->add_option("--fwhm-list", fwhm_list, "comma-separated widths");
  sweep->add_option("--out", out_path, "CSV path");

  CLI::App* theory = app.add_subcommand("theory-sweep", "projection error sweep to CSV");
  theory->add_option("--m-list", m_list, "comma-separated degrees");
  theory->add_option("--out", out_path, "CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (theory->parsed()) {
      std::vector<int> ms;
      for (double v : parse_list(m_list)) ms.push_back(static_cast<int>(v));
      const fs::path csv =
          out_path.empty() ? resolve_out("") / "theory_sweep.csv" : fs::path(out_path);
      chem::cmd_theory_sweep(ms, csv);
      std::cout << "wrote " << csv.string() << "\n";
      return 0;
    }

    chem::RunConfig cfg = load_config(config_path);
    if (alpha > 0) cfg.alpha = alpha;
    if (theta > 0) cfg.theta = theta;
    if (delta > 0) cfg.delta = delta;
    if (!model.empty()) cfg.model = model;
    if (d1 > 0) cfg.d1 = d1;
    if (d2 > 0) cfg.d2 = d2;
    if (ntest > 0) cfg.test = ntest;
    if (side > 0) cfg.scene.side = side;
    if (fwhm > 0) cfg.fwhm = fwhm;
    if (noise_sigma > -2) cfg.noise_sigma = noise_sigma;
    if (!kind.empty())
      cfg.transform.kind =
          kind == "shearlet" ? chem::TransformKind::shearlet : chem::TransformKind::wavelet;
    if (!family.empty()) cfg.transform.wavelet_family = family;
    if (levels > 0) cfg.transform.wavelet_levels = levels;
    if (normalize >= 0) cfg.transform.normalize = normalize != 0;
    if (!std_mode.empty()) cfg.std_mode = std_mode;
    if (workers > 0) cfg.workers = workers;
    if (seed_set) cfg.scene.seed = seed_flag;

    if (synth->parsed()) {
      const fs::path out = resolve_out(out_path);
      const auto m = chem::cmd_synth(cfg, out);
      std::cout << "wrote " << m.count << " pairs to " << out.string()
                << " (noise_sigma=" << m.noise_sigma << ", min peak S/N=" << m.min_peak_snr
                << ")\n";
    } else if (calibrate->parsed()) {
      const fs::path out =
          out_path.empty() ? fs::path(dataset_dir) / "calibration.json" : fs::path(out_path);
      const auto sidecar = chem::cmd_calibrate(cfg, dataset_dir, out);
      std::cout << "calibrated " << sidecar.result.model.size() << " radii (clipped low "
                << sidecar.result.clipped_lo_fraction << ", high "
                << sidecar.result.clipped_hi_fraction << ")\n";
      for (const auto& w : sidecar.warnings) std::cout << "warning: " << w << "\n";
      std::cout << "wrote " << out.string() << "\n";
    } else if (evaluate->parsed()) {
      const fs::path out = resolve_out(out_path);
      const auto res = chem::cmd_evaluate(cfg, dataset_dir, calibration_path, out, maps, scores);
      std::cout << "chem=" << res.result.report.aggregate << " mse=" << res.result.mse
                << " (M=" << res.result.report.sample_count
                << ", hoeffding=" << res.result.report.hoeffding_half_width_value << ")\n"
                << "wrote " << res.report_path.string() << "\n";
    } else if (sweep->parsed()) {
      const fs::path csv =
          out_path.empty() ? resolve_out("") / "sweep.csv" : fs::path(out_path);
      const auto rows = chem::cmd_sweep(cfg, parse_list(fwhm_list), csv);
      std::cout << "wrote " << rows.size() << " rows to " << csv.string() << "\n";
    }
  } catch (const chem::HashMismatchError& e) {
    std::cerr << "hash mismatch: " << e.what() << "\n";
    return kExitHashMismatch;
  } catch (const chem::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
