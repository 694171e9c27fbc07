// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Tolerances are fixed here, not tuned at runtime.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "chem/approx.hpp"
#include "chem/evaluate.hpp"
#include "chem/hash.hpp"
#include "chem/metric.hpp"
#include "pipeline.hpp"
#include "raster_io.hpp"
#include "oracles.hpp"
#include "registry.hpp"

using namespace chem;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

ImageD random_image(Index n, Rng& rng) {
  ImageD img(n, n);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) img(r, c) = rng.normal();
  return img;
}

// ---------------------------------------------------------------------------
// 1. split-conformal coverage on exchangeable synthetic data
Outcome coverage_guarantee() {
  const double alpha = 0.1;
  const int n_d1 = 60, n_d2 = 99, n_test = 2000;

  SceneConfig<double> scene;
  scene.side = 32;
  scene.seed = 20240811;
  scene.min_sources = 1;
  scene.max_sources = 3;
  scene.radius_min = 1.0;
  scene.radius_max = 4.0;
  DegradationConfig<double> deg;
  deg.psf = gaussian_psf<double>(32, 5.0);
  deg.noise_sigma = -1.0;
  const auto ds = make_dataset(scene, deg, n_d1 + n_d2 + n_test);

  TransformConfig tcfg;
  tcfg.kind = TransformKind::wavelet;
  tcfg.wavelet_family = "haar";
  tcfg.wavelet_levels = 2;
  tcfg.normalize = true;
  TextureTransform<double> transform(tcfg);

  TikhonovConfig<double> mcfg;
  mcfg.lambda = 0.05;
  TikhonovReconstructor<double> model(mcfg);

  EvalContext<double> ctx;
  ctx.model = &model;
  ctx.transform = &transform;
  ctx.norm = ds.norm;
  ctx.fm = ForwardModel<double>{deg.psf, ds.noise_sigma / ds.norm.scale};

  std::vector<DatasetPair<double>> d1(ds.pairs.begin(), ds.pairs.begin() + n_d1);
  std::vector<DatasetPair<double>> d2(ds.pairs.begin() + n_d1,
                                      ds.pairs.begin() + n_d1 + n_d2);
  std::vector<DatasetPair<double>> test(ds.pairs.begin() + n_d1 + n_d2, ds.pairs.end());

  const auto cal = calibrate_model(ctx, d1, d2, alpha);
  const auto result = evaluate_model(ctx, test, cal, 1.0);
  const double miss = result.coverage.mean_miscoverage;

  Outcome o;
  o.pass = miss >= 0.09 - 0.02 && miss <= 0.10 + 0.02;
  std::ostringstream s;
  s << "mean miscoverage " << miss << " in [0.07, 0.12], N=99 M=2000";
  o.detail = s.str();
  return o;
}

// ---------------------------------------------------------------------------
// 2. the ground-truth map scores exactly zero
Outcome zero_hallucination_identity() {
  SceneConfig<double> scene;
  scene.side = 32;
  scene.seed = 7;
  DegradationConfig<double> deg;
  deg.psf = gaussian_psf<double>(32, 5.0);
  deg.noise_sigma = -1.0;
  const auto ds = make_dataset(scene, deg, 40);

  TransformConfig tcfg;
  tcfg.wavelet_family = "db4";
  tcfg.wavelet_levels = 3;
  tcfg.normalize = true;
  TextureTransform<double> transform(tcfg);
  GroundTruthReconstructor<double> model;

  EvalContext<double> ctx;
  ctx.model = &model;
  ctx.transform = &transform;
  ctx.norm = ds.norm;
  ctx.fm = ForwardModel<double>{deg.psf, ds.noise_sigma / ds.norm.scale};

  std::vector<DatasetPair<double>> d1(ds.pairs.begin(), ds.pairs.begin() + 15);
  std::vector<DatasetPair<double>> d2(ds.pairs.begin() + 15, ds.pairs.begin() + 30);
  std::vector<DatasetPair<double>> test(ds.pairs.begin() + 30, ds.pairs.end());
  const auto cal = calibrate_model(ctx, d1, d2, 0.1);
  const auto result = evaluate_model(ctx, test, cal, 1.0);

  Outcome o;
  o.pass = result.report.aggregate == 0.0;
  std::ostringstream s;
  s << "aggregate " << result.report.aggregate << " (exact zero required)";
  o.detail = s.str();
  return o;
}

// ---------------------------------------------------------------------------
// 3. controlled injection is detected on every replication
Outcome detection_power() {
  const double alpha = 0.1;
  const int n_d1 = 16, n_d2 = 19, n_test = 10, seeds = 20;
  int detected = 0, oriented = 0;
  double worst_margin = 1e300;

  for (int rep = 0; rep < seeds; ++rep) {
    SceneConfig<double> scene;
    scene.side = 64;
    scene.seed = 5000 + 131 * rep;
    scene.min_sources = 1;
    scene.max_sources = 3;
    DegradationConfig<double> deg;
    deg.psf = gaussian_psf<double>(64, 8.0);
    deg.noise_sigma = -1.0;
    const auto ds = make_dataset(scene, deg, n_d1 + n_d2 + n_test);

    TransformConfig tcfg;
    tcfg.kind = TransformKind::shearlet;
    tcfg.normalize = true;  // puts every subband on a comparable score scale
    TextureTransform<double> transform(tcfg);

    TikhonovConfig<double> mcfg;  // width picked per image by risk estimate
    TikhonovReconstructor<double> base(mcfg);

    EvalContext<double> ctx;
    ctx.model = &base;
    ctx.transform = &transform;
    ctx.norm = ds.norm;
    ctx.fm = ForwardModel<double>{deg.psf, ds.noise_sigma / ds.norm.scale};

    std::vector<DatasetPair<double>> d1(ds.pairs.begin(), ds.pairs.begin() + n_d1);
    std::vector<DatasetPair<double>> d2(ds.pairs.begin() + n_d1,
                                        ds.pairs.begin() + n_d1 + n_d2);
    std::vector<DatasetPair<double>> test(ds.pairs.begin() + n_d1 + n_d2, ds.pairs.end());
    const auto cal = calibrate_model(ctx, d1, d2, alpha);

    // injected amplitude: three times the median calibrated radius over the
    // finest-scale coefficients
    const SubbandLayout layout = transform.layout(64, 64);
    std::vector<double> finest_radii;
    for (std::size_t b = 0; b < layout.band_count(); ++b) {
      const auto& rec = layout.band(b);
      if (rec.is_approx || rec.scale != 1) continue;
      for (Index j = rec.offset; j < rec.offset + rec.size(); ++j)
        finest_radii.push_back(cal.model.half_width(j));
    }
    std::nth_element(finest_radii.begin(), finest_radii.begin() + finest_radii.size() / 2,
                     finest_radii.end());
    const double amplitude = 3.0 * finest_radii[finest_radii.size() / 2];

    TextureSpec<double> tex;
    tex.angle_deg = 45.0;
    tex.wavelength = 3.0;
    tex.patch_side = 20;
    tex.placement = TexturePlacement::brightest_blob;
    auto base_shared = std::make_shared<TikhonovReconstructor<double>>(mcfg);
    HallucinatorReconstructor<double> hallucinator(base_shared, tex, amplitude);

    const auto base_result = evaluate_model(ctx, test, cal, 1.0);
    EvalContext<double> hctx = ctx;
    hctx.model = &hallucinator;
    const auto hal_result = evaluate_model(hctx, test, cal, 1.0);

    if (hal_result.report.aggregate > base_result.report.aggregate) ++detected;
    worst_margin = std::min(worst_margin,
                            hal_result.report.aggregate - base_result.report.aggregate);

    // subband with the maximum mean standardized score
    double best_score = -1e300, best_angle = -1.0;
    int best_scale = 0;
    for (std::size_t b = 0; b < layout.band_count(); ++b) {
      const auto& rec = layout.band(b);
      const double mean_score =
          hal_result.report.standardized.segment(rec.offset, rec.size()).mean();
      if (mean_score > best_score) {
        best_score = mean_score;
        best_angle = rec.angle_deg;
        best_scale = rec.scale;
      }
    }
    if (best_scale == 1 && std::abs(best_angle - 45.0) < 1e-9) ++oriented;
  }

  Outcome o;
  o.pass = detected == seeds && oriented == seeds;
  std::ostringstream s;
  s << "detected " << detected << "/" << seeds << ", injected band ranked first " << oriented
    << "/" << seeds << ", min margin " << worst_margin;
  o.detail = s.str();
  return o;
}

// ---------------------------------------------------------------------------
// 4. Monte-Carlo agreement with the concentration bound
Outcome hoeffding_bound_check() {
  const int reps = 500, m = 200;
  const double theta = 1.0, delta = 0.1;
  const double hw = hoeffding_half_width(theta, delta, m);
  int violations = 0;
  for (int r = 0; r < reps; ++r) {
    Rng rng(31000 + r);
    double mean = 0.0;
    for (int i = 0; i < m; ++i) mean += theta * rng.uniform() / m;
    if (std::abs(mean - 0.5 * theta) > hw) ++violations;
  }
  Outcome o;
  o.pass = violations <= 70;
  std::ostringstream s;
  s << violations << " violations out of " << reps << " (allowed 70)";
  o.detail = s.str();
  return o;
}

// ---------------------------------------------------------------------------
// 5. transform identities over 100 random images
Outcome transform_identities() {
  Rng rng(11);
  double worst_pr = 0.0, worst_energy = 0.0, worst_shear = 0.0;
  static ShearletSystem<double> shear{ShearletSpec{}, 32};
  for (int i = 0; i < 100; ++i) {
    const ImageD img = random_image(32, rng);
    const double energy = img.square().sum();
    for (const char* family : {"haar", "db4", "db8"}) {
      const auto spec = WaveletSpec<double>::make(family);
      const auto field = dwt_forward(img, spec, 3);
      worst_pr = std::max(worst_pr, (dwt_inverse(field, spec) - img).abs().maxCoeff());
      worst_energy =
          std::max(worst_energy, std::abs(field.values.square().sum() - energy) / energy);
    }
    const auto sf = shearlet_forward(img, shear);
    worst_shear = std::max(worst_shear, (shearlet_inverse(sf, shear) - img).abs().maxCoeff());
  }
  Outcome o;
  o.pass = worst_pr <= 1e-10 && worst_energy <= 1e-10 && worst_shear <= 1e-6;
  std::ostringstream s;
  s << "wavelet PR " << worst_pr << " <= 1e-10, energy " << worst_energy
    << " <= 1e-10, shearlet recon " << worst_shear << " <= 1e-6";
  o.detail = s.str();
  return o;
}

// ---------------------------------------------------------------------------
// 6. dense-oracle agreement and risk-estimate selection quality
Outcome tikhonov_sure() {
  // dense agreement on 8x8 against the brute-force normal-equations solve
  Rng rng(3);
  ImageD y8(8, 8);
  for (Index r = 0; r < 8; ++r)
    for (Index c = 0; c < 8; ++c) y8(r, c) = rng.normal();
  const auto psf8 = gaussian_psf<double>(8, 3.0);
  const ImageD xf = tikhonov_deconvolve(y8, psf8, 0.1);
  const ImageD dense = oracle::dense_tikhonov(y8, ifftshift(psf8.kernel), 0.1);
  const double resid = (xf - dense).abs().maxCoeff();

  // risk-estimate selection across 50 noisy replications
  const Index n = 64;
  const auto psf = gaussian_psf<double>(n, 6.0);
  SceneConfig<double> scene;
  scene.side = n;
  scene.seed = 404;
  scene.min_sources = 2;
  scene.max_sources = 4;
  const auto grid = default_sure_grid(psf);
  int close_hits = 0;
  const int reps = 50;
  for (int rep = 0; rep < reps; ++rep) {
    SceneConfig<double> sc = scene;
    sc.seed = 404 + rep;
    const ImageD x = synthesize_scene(sc);
    const ImageD clean = convolve_psf(x, psf);
    const double sigma = 0.02 * clean.maxCoeff();
    ImageD y = clean;
    Rng noise(88000 + rep);
    for (Index r = 0; r < n; ++r)
      for (Index c = 0; c < n; ++c) y(r, c) += sigma * noise.normal();

    const auto curve = sure_select_lambda(y, psf, sigma, grid);
    std::size_t best = 0;
    double best_risk = 1e300;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const ImageD xh = tikhonov_deconvolve(y, psf, grid[i]);
      const double risk = (convolve_psf(xh, psf) - clean).square().sum();
      if (risk < best_risk) {
        best_risk = risk;
        best = i;
      }
    }
    const auto diff = curve.chosen_index > best ? curve.chosen_index - best
                                                : best - curve.chosen_index;
    if (diff <= 1) ++close_hits;
  }

  Outcome o;
  o.pass = resid <= 1e-8 && close_hits >= 40;
  std::ostringstream s;
  s << "dense residual " << resid << ", selection within one grid step " << close_hits << "/" << reps
    << " (needs 40)";
  o.detail = s.str();
  return o;
}

// ---------------------------------------------------------------------------
// 7. degradation-width sweep: departure from the calibrated width raises
//    both MSE and the hallucination score
Outcome sweep_trend() {
  RunConfig cfg;
  cfg.transform.kind = TransformKind::wavelet;
  cfg.transform.wavelet_family = "db8";
  cfg.transform.wavelet_levels = 4;
  cfg.transform.normalize = true;
  cfg.model = "tikhonov:sure";
  cfg.alpha = 0.05;
  cfg.theta = 1.0;
  cfg.d1 = 20;
  cfg.d2 = 40;
  cfg.test = 10;
  cfg.scene.side = 128;
  cfg.scene.seed = 777;
  cfg.scene.min_sources = 1;
  cfg.scene.max_sources = 4;
  cfg.fwhm = 15.0;
  cfg.noise_sigma = -1.0;

  const auto rows = cmd_sweep(cfg, {15.0, 20.0, 25.0}, fs::path{});
  double mse15 = 0, mse20 = 0, mse25 = 0, chem15 = 0, chem20 = 0, chem25 = 0;
  for (const auto& r : rows) {
    if (r.fwhm == 15.0) mse15 = r.mse, chem15 = r.chem;
    if (r.fwhm == 20.0) mse20 = r.mse, chem20 = r.chem;
    if (r.fwhm == 25.0) mse25 = r.mse, chem25 = r.chem;
  }
  Outcome o;
  o.pass = mse20 > mse15 && mse25 > mse15 && chem20 > chem15 && chem25 > chem15;
  std::ostringstream s;
  s << "mse " << mse15 << " -> " << mse20 << " -> " << mse25 << "; chem " << chem15 << " -> "
    << chem20 << " -> " << chem25;
  o.detail = s.str();
  return o;
}

// ---------------------------------------------------------------------------
// 8. polynomial encode/decode and projector bounds
Outcome approximation_lab() {
  using namespace chem::approx;
  Rng rng(2025);

  // encode/decode round trip at 1e-9
  double worst_roundtrip = 0.0;
  for (int d : {1, 2}) {
    const int m = d == 1 ? 6 : 4;
    MultiPoly q{d, m, Eigen::VectorXd(tensor_size(m, d))};
    for (Eigen::Index i = 0; i < q.coeffs.size(); ++i) q.coeffs[i] = rng.normal();
    const MultiPoly back{d, m, encode_phi(q)};
    for (int trial = 0; trial < 100; ++trial) {
      Point p(d);
      for (int a = 0; a < d; ++a) p[a] = rng.uniform(-1.0, 1.0);
      worst_roundtrip = std::max(worst_roundtrip, std::abs(back(p) - q(p)));
    }
  }

  // projector sup-norm on 50 random smooth functions
  bool norm_ok = true;
  Point x(1);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = rng.normal(), b = rng.normal();
    const double w1 = 1.0 + 2.0 * rng.uniform(), w2 = 1.0 + 2.0 * rng.uniform();
    ScalarField f{[=](const Point& p) { return a * std::sin(w1 * p[0]) + b * std::cos(w2 * p[0]); },
                  1, -1.0};
    const int m = 2 + static_cast<int>(rng.uniform_index(12));
    const auto vf = bernstein_project(f, m, 1);
    double sup_f = 0.0, sup_vf = 0.0;
    for (int i = 0; i <= 600; ++i) {
      x[0] = -1.0 + 2.0 * i / 600.0;
      sup_f = std::max(sup_f, std::abs(f(x)));
      sup_vf = std::max(sup_vf, std::abs(vf(x)));
    }
    if (sup_vf > sup_f * (1.0 + 1e-12)) norm_ok = false;
  }

  // projector error against the (5d/4) modulus bound, analytic moduli
  bool bound_ok = true;
  struct Probe {
    ScalarField f;
    std::function<double(double)> omega;
    int d;
  };
  std::vector<Probe> probes;
  probes.push_back({ScalarField{[](const Point& p) { return p[0] * p[0]; }, 1, 2.0},
                    [](double r) { return r * (2.0 - r); }, 1});
  probes.push_back({ScalarField{[](const Point& p) { return std::sin(3.0 * p[0]); }, 1, 3.0},
                    [](double r) { return 2.0 * std::sin(std::min(3.0 * r, chem::kPi) / 2.0); },
                    1});
  probes.push_back(
      {ScalarField{[](const Point& p) { return p[0] * p[0] + p[1] * p[1]; }, 2, -1.0},
       [](double r) { return r * (2.0 * std::sqrt(2.0) - r); }, 2});
  for (const auto& probe : probes) {
    for (int m : {2, 4, 8, 16}) {
      if (probe.d == 2 && m > 8) continue;
      const auto vf = bernstein_project(probe.f, m, probe.d);
      const Eigen::MatrixXd grid = probe_grid(probe.d, probe.d == 1 ? 4096 : 96);
      double err = 0.0;
      for (Eigen::Index i = 0; i < grid.rows(); ++i) {
        const Point p = grid.row(i).transpose();
        err = std::max(err, std::abs(probe.f(p) - vf(p)));
      }
      const double bound = 1.25 * probe.d * probe.omega(2.0 / m);
      if (err > bound) bound_ok = false;
    }
  }

  Outcome o;
  o.pass = worst_roundtrip <= 1e-9 && norm_ok && bound_ok;
  std::ostringstream s;
  s << "round trip " << worst_roundtrip << " <= 1e-9, sup-norm contraction "
    << (norm_ok ? "held" : "VIOLATED") << ", modulus bound " << (bound_ok ? "held" : "VIOLATED");
  o.detail = s.str();
  return o;
}

// ---------------------------------------------------------------------------
// 9. byte-identical pipeline reruns
Outcome pipeline_determinism() {
  RunConfig cfg;
  cfg.transform.wavelet_family = "db4";
  cfg.transform.wavelet_levels = 2;
  cfg.transform.normalize = true;
  cfg.model = "tikhonov:sure";
  cfg.alpha = 0.1;
  cfg.d1 = 12;
  cfg.d2 = 10;
  cfg.test = 6;
  cfg.scene.side = 32;
  cfg.scene.seed = 99;
  cfg.fwhm = 5.0;
  cfg.noise_sigma = -1.0;

  const fs::path root = fs::temp_directory_path() / "chem_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::string> reports, cals, bins, manifests;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / run;
    cmd_synth(cfg, dir);
    cmd_calibrate(cfg, dir, dir / "calibration.json");
    cmd_evaluate(cfg, dir, dir / "calibration.json", dir / "out");
    manifests.push_back(read_file_bytes(dir / "manifest.json"));
    cals.push_back(read_file_bytes(dir / "calibration.json"));
    bins.push_back(read_file_bytes(dir / "calibration.bin"));
    reports.push_back(read_file_bytes(dir / "out" / "report.json"));
  }
  fs::remove_all(root);
  Outcome o;
  o.pass = manifests[0] == manifests[1] && cals[0] == cals[1] && bins[0] == bins[1] &&
           reports[0] == reports[1];
  o.detail = o.pass ? "manifest, sidecars and report byte-identical across reruns"
                    : "byte mismatch between reruns";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "coverage-guarantee", coverage_guarantee},
      {2, "zero-hallucination-identity", zero_hallucination_identity},
      {3, "detection-power", detection_power},
      {4, "hoeffding-bound", hoeffding_bound_check},
      {5, "transform-identities", transform_identities},
      {6, "tikhonov-sure", tikhonov_sure},
      {7, "perturbation-sweep-trend", sweep_trend},
      {8, "approximation-lab", approximation_lab},
      {9, "pipeline-determinism", pipeline_determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", c.number, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  if (failures > 0) std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
