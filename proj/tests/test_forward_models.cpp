#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "chem/forward_model.hpp"
#include "chem/psf.hpp"
#include "chem/scene.hpp"
#include "oracles.hpp"

using namespace chem;

TEST_CASE("gaussian psf: width relation, mass, symmetry") {
  const auto psf = gaussian_psf<double>(31, 15.0);
  CHECK(psf.sigma == doctest::Approx(6.36996).epsilon(1e-4 / 6.36996));
  CHECK(psf.kernel.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((psf.kernel >= 0.0).all());

  // even symmetry about the center, exact by the formula
  const Index n = psf.kernel.rows();
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c)
      CHECK(psf.kernel(r, c) == psf.kernel(n - 1 - r, n - 1 - c));

  for (Index side : {8, 13, 65})
    for (double fwhm : {0.5, 3.0, 20.0})
      CHECK(gaussian_psf<double>(side, fwhm).kernel.sum() == doctest::Approx(1.0).epsilon(1e-12));

  // a vanishingly narrow psf puts essentially all mass on the center pixel
  const auto narrow = gaussian_psf<double>(65, 0.1);
  CHECK(narrow.kernel(32, 32) > 0.999);

  CHECK_THROWS_AS(gaussian_psf<double>(16, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_psf<double>(16, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_psf<double>(0, 1.0), std::invalid_argument);
}

TEST_CASE("degrade with a delta kernel and no noise is the identity") {
  Rng rng(5);
  const ImageD x = oracle::random_image(16, 16, rng);
  DegradationConfig<double> cfg;
  cfg.psf = Psf<double>::delta(16);
  cfg.noise_sigma = 0.0;
  const ImageD y = degrade(x, cfg);
  CHECK((y - x).abs().maxCoeff() == 0.0);

  // odd side too: the delta pixel is the one the roll maps to the origin
  const ImageD x13 = oracle::random_image(13, 13, rng);
  DegradationConfig<double> cfg13;
  cfg13.psf = Psf<double>::delta(13);
  CHECK((degrade(x13, cfg13) - x13).abs().maxCoeff() == 0.0);
}

TEST_CASE("degrade rejects mismatched grids and negative noise") {
  Rng rng(6);
  const ImageD x = oracle::random_image(16, 16, rng);
  DegradationConfig<double> cfg;
  cfg.psf = gaussian_psf<double>(8, 2.0);
  CHECK_THROWS_AS(degrade(x, cfg), std::invalid_argument);
  cfg.psf = gaussian_psf<double>(16, 2.0);
  cfg.noise_sigma = -0.1;
  CHECK_THROWS_AS(degrade(x, cfg), std::invalid_argument);
}

TEST_CASE("fft blur matches the O(n^4) spatial convolution oracle") {
  Rng rng(10);
  const ImageD x = oracle::random_image(16, 16, rng);
  const auto psf = gaussian_psf<double>(16, 5.0);
  DegradationConfig<double> cfg;
  cfg.psf = psf;
  const ImageD fast = degrade(x, cfg);
  const ImageD slow = oracle::spatial_circular_convolve(x, ifftshift(psf.kernel));
  CHECK((fast - slow).abs().maxCoeff() < 1e-8);
}

TEST_CASE("degradation is deterministic per seed") {
  Rng rng(77);
  const ImageD x = oracle::random_image(32, 32, rng);
  DegradationConfig<double> cfg;
  cfg.psf = gaussian_psf<double>(32, 4.0);
  cfg.noise_sigma = 0.3;
  cfg.seed = 123456;
  const ImageD a = degrade(x, cfg);
  const ImageD b = degrade(x, cfg);
  CHECK((a == b).all());
  cfg.seed = 123457;
  CHECK(!(degrade(x, cfg) == a).all());
}

TEST_CASE("blur commutes with circular shifts") {
  Rng rng(8);
  const ImageD x = oracle::random_image(16, 16, rng);
  const auto psf = gaussian_psf<double>(16, 3.0);
  ImageD shifted(16, 16);
  const Index dr = 5, dc = 11;
  for (Index r = 0; r < 16; ++r)
    for (Index c = 0; c < 16; ++c) shifted((r + dr) % 16, (c + dc) % 16) = x(r, c);
  const ImageD a = convolve_psf(shifted, psf);
  ImageD b(16, 16);
  const ImageD bx = convolve_psf(x, psf);
  for (Index r = 0; r < 16; ++r)
    for (Index c = 0; c < 16; ++c) b((r + dr) % 16, (c + dc) % 16) = bx(r, c);
  CHECK((a - b).abs().maxCoeff() < 1e-12);
}

TEST_CASE("noiseless degradation is linear in the scene") {
  Rng rng(31);
  const ImageD x = oracle::random_image(16, 16, rng);
  const ImageD y = oracle::random_image(16, 16, rng);
  const auto psf = gaussian_psf<double>(16, 4.0);
  const ImageD lhs = convolve_psf(ImageD(2.0 * x - 3.0 * y), psf);
  const ImageD rhs = 2.0 * convolve_psf(x, psf) - 3.0 * convolve_psf(y, psf);
  CHECK((lhs - rhs).abs().maxCoeff() < 1e-12);
}

TEST_CASE("synthesize_scene basics") {
  SceneConfig<double> cfg;
  cfg.side = 64;
  cfg.min_sources = 0;
  cfg.max_sources = 0;
  cfg.seed = 1;
  CHECK(synthesize_scene(cfg).abs().maxCoeff() == 0.0);

  // single gaussian source: pixel sum approximates the flux
  Source<double> src;
  src.row = 31.3;
  src.col = 30.2;
  src.flux = 123.0;
  src.scale_radius = 2.5;
  const ImageD img = render_scene<double>(64, {src});
  CHECK(img.sum() == doctest::Approx(123.0).epsilon(0.01));

  // mirrored identical sources give a mirror-symmetric image
  Source<double> a = src, b = src;
  a.col = 20.0;
  b.col = 63.0 - 20.0;
  const ImageD sym = render_scene<double>(64, {a, b});
  for (Index r = 0; r < 64; ++r)
    for (Index c = 0; c < 64; ++c) CHECK(sym(r, c) == doctest::Approx(sym(r, 63 - c)).epsilon(1e-12));
}

TEST_CASE("sersic profile integrates to its flux") {
  Source<double> src;
  src.row = 64;
  src.col = 64;
  src.flux = 200.0;
  src.scale_radius = 3.0;
  src.profile = SourceProfile::sersic;
  src.sersic_index = 1.0;
  const ImageD img = render_scene<double>(128, {src});
  CHECK(img.sum() == doctest::Approx(200.0).epsilon(0.02));
}

TEST_CASE("make_dataset: determinism, derived noise rule, shared truths") {
  SceneConfig<double> scene;
  scene.side = 32;
  scene.seed = 42;
  scene.min_sources = 1;
  scene.max_sources = 3;
  DegradationConfig<double> deg;
  deg.psf = gaussian_psf<double>(32, 5.0);
  deg.noise_sigma = -1.0;  // derive from the faintest source

  const auto ds1 = make_dataset(scene, deg, 4);
  const auto ds2 = make_dataset(scene, deg, 4);
  REQUIRE(ds1.pairs.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK((ds1.pairs[i].degraded == ds2.pairs[i].degraded).all());
    CHECK((ds1.pairs[i].truth == ds2.pairs[i].truth).all());
  }
  CHECK(ds1.noise_sigma > 0.0);
  CHECK(ds1.min_peak_snr == doctest::Approx(1.0).epsilon(0.05));

  // same scene seed, different widths: ground truths shared
  DegradationConfig<double> wider = deg;
  wider.psf = gaussian_psf<double>(32, 8.0);
  const auto ds3 = make_dataset(scene, wider, 4);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK((ds3.pairs[i].truth == ds1.pairs[i].truth).all());

  // normalization maps the observed range into [-1, 1]
  for (const auto& p : ds1.pairs) {
    const ImageD nx = ds1.norm.apply(p.degraded);
    CHECK(nx.maxCoeff() <= 1.0 + 1e-12);
    CHECK(nx.minCoeff() >= -1.0 - 1e-12);
    const ImageD back = ds1.norm.invert(nx);
    CHECK((back - p.degraded).abs().maxCoeff() < 1e-9);
  }
}
