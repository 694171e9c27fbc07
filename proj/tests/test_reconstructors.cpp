#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "chem/reconstructors.hpp"
#include "chem/shearlet.hpp"
#include "oracles.hpp"
#include "registry.hpp"

#include <map>

using namespace chem;

TEST_CASE("tikhonov: delta kernel with zero lambda returns the input") {
  Rng rng(2);
  const ImageD y = oracle::random_image(8, 8, rng);
  const ImageD x = tikhonov_deconvolve(y, Psf<double>::delta(8), 0.0);
  CHECK((x - y).abs().maxCoeff() < 1e-12);
}

TEST_CASE("tikhonov matches the dense normal-equations solve on 8x8") {
  Rng rng(12);
  const ImageD y = oracle::random_image(8, 8, rng);
  const auto psf = gaussian_psf<double>(8, 3.0);
  const ImageD fast = tikhonov_deconvolve(y, psf, 0.1);
  const ImageD dense = oracle::dense_tikhonov(y, ifftshift(psf.kernel), 0.1);
  CHECK((fast - dense).abs().maxCoeff() < 1e-8);
}

TEST_CASE("tikhonov normal-equations residual stays tiny") {
  Rng rng(13);
  for (Index n : {8, 16}) {
    const ImageD y = oracle::random_image(n, n, rng);
    const auto psf = gaussian_psf<double>(n, 2.5);
    const double lambda = 0.05;
    const ImageD xhat = tikhonov_deconvolve(y, psf, lambda);
    // residual (H^T H + lambda G^T G) x - H^T y, via dense operators
    const Eigen::MatrixXd h = oracle::dense_circulant(ifftshift(psf.kernel));
    const Eigen::MatrixXd g = oracle::dense_laplacian(n, n);
    Eigen::VectorXd xv(n * n), yv(n * n);
    for (Index r = 0; r < n; ++r)
      for (Index c = 0; c < n; ++c) {
        xv(r * n + c) = xhat(r, c);
        yv(r * n + c) = y(r, c);
      }
    const Eigen::VectorXd resid =
        (h.transpose() * h + lambda * g.transpose() * g) * xv - h.transpose() * yv;
    CHECK(resid.lpNorm<Eigen::Infinity>() < 1e-8 * y.abs().maxCoeff());
  }
}

TEST_CASE("tikhonov recovers a noiseless blur with tiny lambda") {
  Rng rng(3);
  // odd side keeps the kernel centered on a pixel, so the transfer function
  // stays strictly positive
  const ImageD x = oracle::random_image(9, 9, rng);
  const auto psf = gaussian_psf<double>(9, 1.0);
  const ImageD y = convolve_psf(x, psf);
  const ImageD xhat = tikhonov_deconvolve(y, psf, 1e-10);
  CHECK((xhat - x).abs().maxCoeff() < 1e-4);
}

TEST_CASE("tikhonov rejects a singular zero-lambda system") {
  Rng rng(4);
  const ImageD y = oracle::random_image(64, 64, rng);
  const auto psf = gaussian_psf<double>(64, 25.0);  // transfer function underflows to zero
  CHECK_THROWS_AS(tikhonov_deconvolve(y, psf, 0.0), std::runtime_error);
  CHECK_THROWS_AS(tikhonov_deconvolve(y, psf, -0.5), std::invalid_argument);
}

TEST_CASE("data-fit error is non-decreasing in lambda") {
  Rng rng(9);
  const ImageD x = oracle::random_image(16, 16, rng);
  const auto psf = gaussian_psf<double>(16, 3.0);
  const ImageD y = convolve_psf(x, psf);
  double prev = -1.0;
  for (double lambda : {1e-6, 1e-4, 1e-2, 1e-1, 1.0, 10.0, 100.0}) {
    const ImageD xhat = tikhonov_deconvolve(y, psf, lambda);
    const double fit = std::sqrt((convolve_psf(xhat, psf) - y).square().sum());
    CHECK(fit >= prev - 1e-10);
    prev = fit;
  }
}

TEST_CASE("SURE divergence equals the dense hat-matrix trace on 8x8") {
  const auto psf = gaussian_psf<double>(8, 3.0);
  const double lambda = 0.07;
  const double fast = tikhonov_divergence(psf, lambda);
  const Eigen::MatrixXd h = oracle::dense_circulant(ifftshift(psf.kernel));
  const Eigen::MatrixXd g = oracle::dense_laplacian(8, 8);
  const Eigen::MatrixXd a =
      (h.transpose() * h + lambda * g.transpose() * g).ldlt().solve(h.transpose());
  CHECK(fast == doctest::Approx((h * a).trace()).epsilon(1e-8));
}

TEST_CASE("SURE is an unbiased tracker of the observation-domain risk") {
  // mean SURE curve over noise draws vs mean risk curve from the known truth
  Rng rng(100);
  const Index n = 16;
  const ImageD x = oracle::random_image(n, n, rng) * 2.0 + 1.0;
  const auto psf = gaussian_psf<double>(n, 3.0);
  const ImageD clean = convolve_psf(x, psf);
  const double sigma = 0.25;
  const auto grid = default_sure_grid(psf, 25);

  std::vector<double> mean_sure(grid.size(), 0.0), mean_risk(grid.size(), 0.0);
  const int draws = 200;
  for (int d = 0; d < draws; ++d) {
    ImageD y = clean;
    Rng noise(9000 + d);
    for (Index r = 0; r < n; ++r)
      for (Index c = 0; c < n; ++c) y(r, c) += sigma * noise.normal();
    const auto curve = sure_select_lambda(y, psf, sigma, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      mean_sure[i] += curve.values[i] / draws;
      const ImageD xh = tikhonov_deconvolve(y, psf, grid[i]);
      mean_risk[i] += (convolve_psf(xh, psf) - clean).square().sum() / draws;
    }
  }
  // Pearson correlation between the two curves
  double ms = 0, mr = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ms += mean_sure[i] / grid.size();
    mr += mean_risk[i] / grid.size();
  }
  double num = 0, ds = 0, dr = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    num += (mean_sure[i] - ms) * (mean_risk[i] - mr);
    ds += (mean_sure[i] - ms) * (mean_sure[i] - ms);
    dr += (mean_risk[i] - mr) * (mean_risk[i] - mr);
  }
  CHECK(num / std::sqrt(ds * dr) > 0.99);
}

TEST_CASE("SURE argmin lies on the grid") {
  Rng rng(55);
  const ImageD y = oracle::random_image(16, 16, rng);
  const auto psf = gaussian_psf<double>(16, 3.0);
  const auto grid = default_sure_grid(psf);
  const auto curve = sure_select_lambda(y, psf, 0.1, grid);
  CHECK(curve.chosen == grid[curve.chosen_index]);
  CHECK_THROWS_AS(sure_select_lambda(y, psf, 0.1, std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(sure_select_lambda(y, psf, 0.0, grid), std::invalid_argument);
}

TEST_CASE("wiener: closed forms and dense agreement") {
  Rng rng(6);
  const ImageD y = oracle::random_image(8, 8, rng);
  const double snr = 5.0;
  const ImageD x = wiener_deconvolve(y, Psf<double>::delta(8), snr);
  CHECK((x - y * (snr / (snr + 1.0))).abs().maxCoeff() < 1e-12);

  const ImageD x_hi = wiener_deconvolve(y, Psf<double>::delta(8), 1e12);
  CHECK((x_hi - y).abs().maxCoeff() < 1e-9);

  CHECK(wiener_deconvolve(ImageD(ImageD::Zero(8, 8)), gaussian_psf<double>(8, 2.0), 10.0)
            .abs()
            .maxCoeff() == 0.0);

  // dense route: (H^T H + (1/snr) I)^-1 H^T y
  const auto psf = gaussian_psf<double>(8, 2.0);
  const ImageD fast = wiener_deconvolve(y, psf, snr);
  const Eigen::MatrixXd h = oracle::dense_circulant(ifftshift(psf.kernel));
  Eigen::VectorXd yv(64);
  for (Index r = 0; r < 8; ++r)
    for (Index c = 0; c < 8; ++c) yv(r * 8 + c) = y(r, c);
  const Eigen::MatrixXd lhs =
      h.transpose() * h + (1.0 / snr) * Eigen::MatrixXd::Identity(64, 64);
  const Eigen::VectorXd xv = lhs.ldlt().solve(h.transpose() * yv);
  for (Index r = 0; r < 8; ++r)
    for (Index c = 0; c < 8; ++c) CHECK(fast(r, c) == doctest::Approx(xv(r * 8 + c)).epsilon(1e-8));
}

TEST_CASE("wiener equals tikhonov with the identity penalty") {
  Rng rng(61);
  const ImageD y = oracle::random_image(16, 16, rng);
  const auto psf = gaussian_psf<double>(16, 3.0);
  const double snr = 40.0;
  const ImageD w = wiener_deconvolve(y, psf, snr);
  const ImageD t = tikhonov_deconvolve(y, psf, 1.0 / snr, TikhonovPenalty::identity);
  CHECK((w - t).abs().maxCoeff() < 1e-12);
}

TEST_CASE("hallucinator: amplitude zero is the base, energy identity holds") {
  Rng rng(90);
  const ImageD scene = oracle::random_image(64, 64, rng).abs();
  DegradationConfig<double> deg;
  deg.psf = gaussian_psf<double>(64, 6.0);
  const ImageD y = degrade(scene, deg);
  ForwardModel<double> fm{deg.psf, 0.0};

  auto base = std::make_shared<IdentityReconstructor<double>>();
  TextureSpec<double> tex;
  tex.patch_side = 16;
  tex.wavelength = 3.0;
  tex.angle_deg = 45.0;

  HallucinatorReconstructor<double> zero(base, tex, 0.0);
  CHECK((zero.reconstruct(y, fm) - y).abs().maxCoeff() == 0.0);

  const double amp = 0.37;
  HallucinatorReconstructor<double> inj(base, tex, amp);
  const ImageD out = inj.reconstruct(y, fm);
  const double added_energy = (out - y).square().sum();
  CHECK(added_energy == doctest::Approx(amp * amp * 16.0 * 16.0).epsilon(1e-10));
}

TEST_CASE("hallucinator rejects a negative amplitude") {
  auto base = std::make_shared<IdentityReconstructor<double>>();
  CHECK_THROWS_AS(HallucinatorReconstructor<double>(base, TextureSpec<double>{}, -0.1),
                  std::invalid_argument);
}

TEST_CASE("injected stripes light up the matching finest-scale band") {
  Rng rng(91);
  const ImageD base_img = oracle::random_image(64, 64, rng) * 0.01;
  TextureSpec<double> tex;
  tex.patch_side = 24;
  tex.wavelength = 3.0;
  tex.angle_deg = 45.0;
  tex.placement = TexturePlacement::center;

  auto base = std::make_shared<IdentityReconstructor<double>>();
  HallucinatorReconstructor<double> inj(base, tex, 1.0);
  ForwardModel<double> fm{Psf<double>::delta(64), 0.0};
  const ImageD out = inj.reconstruct(base_img, fm);

  static ShearletSystem<double> sys{ShearletSpec{}, 64};
  const auto f_base = shearlet_forward(base_img, sys);
  const auto f_out = shearlet_forward(out, sys);

  std::map<double, double> gain_by_angle;
  for (std::size_t b = 0; b < sys.band_count(); ++b) {
    const auto& rec = sys.layout().band(b);
    if (rec.is_approx || rec.scale != 1) continue;
    gain_by_angle[rec.angle_deg] +=
        f_out.values.segment(rec.offset, rec.size()).square().sum() -
        f_base.values.segment(rec.offset, rec.size()).square().sum();
  }
  double best_gain = -1e300, best_angle = -1.0;
  for (const auto& [angle, gain] : gain_by_angle)
    if (gain > best_gain) {
      best_gain = gain;
      best_angle = angle;
    }
  CHECK(best_angle == doctest::Approx(45.0).epsilon(1e-9));
}

TEST_CASE("registry round-trips identifiers") {
  CHECK(make_reconstructor("identity")->id() == "identity");
  CHECK(make_reconstructor("oracle")->uses_ground_truth());
  CHECK(make_reconstructor("tikhonov:sure")->id() == "tikhonov:sure");
  CHECK(make_reconstructor("tikhonov:lambda=0.25")->id() == "tikhonov:lambda=0.25");
  CHECK(make_reconstructor("wiener:snr=100")->id() == "wiener:snr=100");
  const auto h = make_reconstructor("hallucinator:base=tikhonov:sure,amp=0.2,angle=45");
  CHECK(h->id() == "hallucinator:base=tikhonov:sure,amp=0.2,angle=45");
  CHECK_THROWS_AS(make_reconstructor("tikhonov:bogus=1"), std::invalid_argument);
  CHECK_THROWS_AS(make_reconstructor("nope"), std::invalid_argument);
  CHECK_THROWS_AS(make_reconstructor("wiener"), std::invalid_argument);
}

TEST_CASE("deterministic reconstructors return identical outputs") {
  Rng rng(70);
  const ImageD scene = oracle::random_image(32, 32, rng).abs();
  DegradationConfig<double> deg;
  deg.psf = gaussian_psf<double>(32, 4.0);
  deg.noise_sigma = 0.05;
  deg.seed = 5;
  const ImageD y = degrade(scene, deg);
  ForwardModel<double> fm{deg.psf, deg.noise_sigma};
  for (const char* id : {"tikhonov:sure", "wiener:snr=50", "shrink:base=tikhonov:sure,t=0.01"}) {
    const auto model = make_reconstructor(id);
    REQUIRE(model->deterministic());
    const ImageD a = model->reconstruct(y, fm);
    const ImageD b = model->reconstruct(y, fm);
    CHECK((a == b).all());
  }
}
