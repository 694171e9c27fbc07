#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "chem/approx.hpp"
#include "chem/hash.hpp"
#include "chem/metric.hpp"
#include "coef_io.hpp"
#include "raster_io.hpp"
#include "registry.hpp"

namespace chem {

namespace {

std::string index_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%05zu.raster", prefix, i);
  return buf;
}

struct Splits {
  std::vector<DatasetPair<double>> d1, d2, test;
};

Splits split_dataset(const RunConfig& cfg, const LoadedDataset& ds) {
  const std::size_t need = static_cast<std::size_t>(cfg.total_samples());
  if (ds.pairs.size() < need)
    throw DataError("dataset has " + std::to_string(ds.pairs.size()) + " pairs, config needs " +
                    std::to_string(need));
  Splits s;
  auto it = ds.pairs.begin();
  s.d1.assign(it, it + cfg.d1);
  it += cfg.d1;
  s.d2.assign(it, it + cfg.d2);
  it += cfg.d2;
  s.test.assign(it, it + cfg.test);
  return s;
}

struct PreparedRun {
  std::shared_ptr<const Reconstructor<double>> model;
  std::unique_ptr<TextureTransform<double>> transform;
  EvalContext<double> ctx;
  Splits splits;
};

PreparedRun prepare_run(const RunConfig& cfg, const LoadedDataset& ds) {
  PreparedRun run;
  run.model = make_reconstructor(cfg.model);
  run.transform = std::make_unique<TextureTransform<double>>(cfg.transform);
  run.splits = split_dataset(cfg, ds);
  run.ctx.model = run.model.get();
  run.ctx.transform = run.transform.get();
  run.ctx.norm = ds.norm;
  run.ctx.fm.psf = gaussian_psf<double>(ds.pairs.front().truth.rows(), ds.manifest.fwhm);
  run.ctx.fm.noise_sigma = ds.manifest.noise_sigma / ds.norm.scale;
  run.ctx.workers = cfg.workers;
  return run;
}

Json rms_to_json(const SubbandRms<double>& rms) {
  std::vector<double> values(rms.rms().data(), rms.rms().data() + rms.rms().size());
  std::vector<int> guarded(rms.guarded().begin(), rms.guarded().end());
  return Json{{"values", values}, {"guarded", guarded}};
}

SubbandRms<double> rms_from_json(const Json& j) {
  const auto values = j.at("values").get<std::vector<double>>();
  const auto guarded_int = j.at("guarded").get<std::vector<int>>();
  VectorD rms(static_cast<Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) rms[static_cast<Index>(i)] = values[i];
  std::vector<std::uint8_t> guarded(guarded_int.begin(), guarded_int.end());
  return SubbandRms<double>::from_values(std::move(rms), std::move(guarded));
}

}  // namespace

Manifest cmd_synth(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);

  DegradationConfig<double> deg;
  deg.psf = gaussian_psf<double>(cfg.scene.side, cfg.fwhm);
  deg.noise_sigma = cfg.noise_sigma;
  deg.seed = cfg.scene.seed;
  const Dataset<double> ds = make_dataset(cfg.scene, deg, cfg.total_samples());

  Manifest m;
  m.config_hash = cfg.config_hash();
  m.count = static_cast<int>(ds.pairs.size());
  m.fwhm = ds.fwhm;
  m.noise_sigma = ds.noise_sigma;
  m.norm_offset = ds.norm.offset;
  m.norm_scale = ds.norm.scale;
  m.min_peak_snr = ds.min_peak_snr;
  m.max_peak_snr = ds.max_peak_snr;
  m.seed = cfg.scene.seed;
  for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
    ManifestEntry e;
    e.degraded_path = index_name("x", i);
    e.truth_path = index_name("y", i);
    e.seed = ds.pairs[i].seed;
    e.min_peak_snr = ds.pairs[i].min_peak_snr;
    write_raster(out_dir / e.degraded_path, ds.pairs[i].degraded);
    write_raster(out_dir / e.truth_path, ds.pairs[i].truth);
    m.entries.push_back(std::move(e));
  }
  write_manifest(out_dir / "manifest.json", m);
  return m;
}

LoadedDataset load_dataset(const std::filesystem::path& dir) {
  LoadedDataset out;
  out.manifest = read_manifest(dir / "manifest.json");
  out.norm.offset = out.manifest.norm_offset;
  out.norm.scale = out.manifest.norm_scale;
  for (const auto& e : out.manifest.entries) {
    DatasetPair<double> pair;
    pair.degraded = read_raster(dir / e.degraded_path);
    pair.truth = read_raster(dir / e.truth_path);
    pair.seed = e.seed;
    pair.min_peak_snr = e.min_peak_snr;
    out.pairs.push_back(std::move(pair));
  }
  return out;
}

CalibrationSidecar cmd_calibrate(const RunConfig& cfg, const std::filesystem::path& dataset_dir,
                                 const std::filesystem::path& out_json) {
  cfg.validate();
  const LoadedDataset ds = load_dataset(dataset_dir);
  PreparedRun run = prepare_run(cfg, ds);

  CalibrationSidecar sidecar;
  const auto qi = conformal_quantile_index(cfg.d2, cfg.alpha);
  if (qi.overflow) {
    std::ostringstream warn;
    warn << "calibration set too small for alpha=" << cfg.alpha << ": need at least "
         << static_cast<int>(std::ceil(1.0 / cfg.alpha)) - 1
         << " samples, multipliers forced to the upper bound";
    sidecar.warnings.push_back(warn.str());
  }

  sidecar.result = calibrate_model(run.ctx, run.splits.d1, run.splits.d2, cfg.alpha,
                                   g_family_from_name(cfg.g_family), cfg.bound_lo, cfg.bound_hi);
  sidecar.transform_hash = cfg.transform_hash();
  sidecar.model_id = run.model->id();
  if (run.transform->normalization()) sidecar.rms = rms_to_json(*run.transform->normalization());
  write_calibration(out_json, sidecar);
  return sidecar;
}

EvaluateOutput cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& dataset_dir,
                            const std::filesystem::path& calibration_json,
                            const std::filesystem::path& out_dir, bool write_maps,
                            bool write_scores) {
  cfg.validate();
  const CalibrationSidecar sidecar = read_calibration(calibration_json);
  if (sidecar.transform_hash != cfg.transform_hash())
    throw HashMismatchError("calibration transform hash " + sidecar.transform_hash +
                            " does not match config transform hash " + cfg.transform_hash());

  const LoadedDataset ds = load_dataset(dataset_dir);
  PreparedRun run = prepare_run(cfg, ds);
  if (run.transform->config().normalize) {
    if (sidecar.rms.is_null()) throw DataError("calibration sidecar lacks RMS constants");
    run.transform->set_normalization(rms_from_json(sidecar.rms));
  }

  std::filesystem::create_directories(out_dir);
  EvaluateOutput out;
  out.result = evaluate_model(run.ctx, run.splits.test, sidecar.result, cfg.theta, cfg.delta,
                              write_scores);
  if (cfg.std_mode == "per_coefficient")
    standardize_scores(out.result.report, StdMode::per_coefficient);
  out.report_path = out_dir / "report.json";
  write_report(out.report_path, out.result, run.model->id(), cfg.config_hash(),
               cfg.transform_hash(), cfg.delta);
  if (write_scores) write_score_matrix(out_dir / "scores.bin", out.result.scores);

  if (write_maps) {
    const SubbandLayout& layout = out.result.layout;
    for (std::size_t i = 0; i < run.splits.test.size(); ++i) {
      const Image<double> pred = predict_normalized(run.ctx, run.splits.test[i]);
      const CoefficientField<double> pred_hat = run.transform->forward(pred);
      const Image<double> map =
          hallucination_map(pred_hat, out.result.report.standardized, layout, *run.transform,
                            cfg.map_scales, cfg.map_threshold);
      char name[32];
      std::snprintf(name, sizeof(name), "map_%05zu.raster", i);
      write_raster(out_dir / name, map);
      std::snprintf(name, sizeof(name), "map_%05zu.pgm", i);
      write_pgm16(out_dir / name, map);
    }
  }
  return out;
}

std::vector<SweepRecord<double>> cmd_sweep(const RunConfig& cfg, const std::vector<double>& fwhms,
                                           const std::filesystem::path& out_csv) {
  cfg.validate();
  if (fwhms.empty()) throw std::invalid_argument("sweep: empty fwhm list");

  DegradationConfig<double> deg;
  deg.psf = gaussian_psf<double>(cfg.scene.side, cfg.fwhm);
  deg.noise_sigma = cfg.noise_sigma;
  deg.seed = cfg.scene.seed;
  const Dataset<double> ds = make_dataset(cfg.scene, deg, cfg.total_samples());

  auto model = make_reconstructor(cfg.model);
  TextureTransform<double> transform(cfg.transform);

  std::vector<DatasetPair<double>> d1(ds.pairs.begin(), ds.pairs.begin() + cfg.d1);
  std::vector<DatasetPair<double>> d2(ds.pairs.begin() + cfg.d1,
                                      ds.pairs.begin() + cfg.d1 + cfg.d2);
  EvalContext<double> ctx;
  ctx.model = model.get();
  ctx.transform = &transform;
  ctx.norm = ds.norm;
  ctx.fm.psf = deg.psf;
  ctx.fm.noise_sigma = ds.noise_sigma / ds.norm.scale;
  ctx.workers = cfg.workers;
  const CalibrationResult<double> cal =
      calibrate_model(ctx, d1, d2, cfg.alpha, g_family_from_name(cfg.g_family), cfg.bound_lo,
                      cfg.bound_hi);

  std::vector<Image<double>> truths;
  for (auto it = ds.pairs.begin() + cfg.d1 + cfg.d2; it != ds.pairs.end(); ++it)
    truths.push_back(it->truth);

  DegradationConfig<double> nominal = deg;
  nominal.noise_sigma = ds.noise_sigma;
  const std::vector<const Reconstructor<double>*> models{model.get()};
  auto rows =
      perturbation_sweep(models, fwhms, truths, nominal, transform, ds.norm, cal, cfg.theta,
                         cfg.workers);
  if (!out_csv.empty()) write_sweep_csv(out_csv, rows);
  return rows;
}

void cmd_theory_sweep(const std::vector<int>& ms, const std::filesystem::path& out_csv) {
  using namespace chem::approx;
  // Soft-clip composed with the probe scene; both Lipschitz constants are
  // known analytically.
  SurrogateOperator op;
  op.name = "softclip";
  op.lipschitz = 1.0;
  op.output_lipschitz = 2.0;
  op.apply = [](const ScalarField& f) {
    ScalarField out;
    out.dim = f.dim;
    FieldFn inner = f.eval;
    out.eval = [inner](const Point& x) { return std::tanh(inner(x)); };
    out.lipschitz = f.lipschitz;
    return out;
  };

  ScalarField probe{[](const Point& x) { return std::sin(2.0 * x[0]); }, 1, 2.0};
  const auto omega = [](double r) { return std::min(2.0, 2.0 * r); };

  const auto rows = discretization_error_sweep(op, probe, omega, ms, 1, 4096);
  std::ostringstream os;
  os.precision(17);
  os << "m,error,bound,omega_f\n";
  for (const auto& r : rows)
    os << r.m << "," << r.error << "," << r.bound << "," << r.omega << "\n";
  std::ofstream f(out_csv, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + out_csv.string());
  const std::string text = os.str();
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace chem
