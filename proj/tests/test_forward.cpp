#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numbers>

#include "pipescan/forward.h"
#include "pipescan/linalg.h"

using namespace pipescan;

namespace {

AcquisitionConfig small_config() {
  AcquisitionConfig c;
  c.f_min_hz = 1.2e9;
  c.f_max_hz = 2.2e9;
  c.f_step_hz = 100e6;  // 11 points
  c.n_positions = 9;
  return c;
}

ImagingGrid small_grid() {
  ImagingGrid g;
  g.nx = 24;
  g.nz = 16;
  return g;
}

Scene moist_scene(double sm) {
  Scene s;
  s.moist_region.radius_m = 0.08;
  s.moist_region.sm_fraction = sm;
  s.moist_region.center_z_m = 0.12;
  return s;
}

}  // namespace

TEST_CASE("background_wavenumber basics") {
  // f = 1 GHz, eps = 1: 2*pi*1e9/c
  const cplx k1 = background_wavenumber(1e9, {1.0, 0.0});
  CHECK(k1.real() == doctest::Approx(20.958450).epsilon(1e-6));
  CHECK(k1.imag() == doctest::Approx(0.0));

  const cplx k4 = background_wavenumber(1e9, {4.0, 0.0});
  CHECK(k4.real() == doctest::Approx(2.0 * k1.real()).epsilon(1e-12));

  // lossy medium: decaying convention Im(k) < 0
  const cplx kl = background_wavenumber(1e9, {4.0, -0.4});
  CHECK(kl.imag() < 0.0);

  CHECK_THROWS_AS(background_wavenumber(0.0, {1.0, 0.0}), std::invalid_argument);
}

TEST_CASE("born_terms_over_freq matches the closed form") {
  const cplx eps{3.03, -0.0606};
  const double r = 0.21, area = 1e-4, f0 = 1.3e9, df = 25e6;
  const std::size_t nf = 7;
  std::vector<cplx> terms(nf);
  born_terms_over_freq(r, eps, f0, df, nf, area, terms.data());

  constexpr double pi = std::numbers::pi;
  for (std::size_t i = 0; i < nf; ++i) {
    const cplx k = background_wavenumber(f0 + i * df, eps);
    const cplx g = std::exp(cplx(0.0, -1.0) * k * r) / (4.0 * pi * r);
    const cplx expect = g * g * area;
    CHECK(std::abs(terms[i] - expect) <= 1e-12 * std::abs(expect));
  }
  CHECK_THROWS_AS(born_terms_over_freq(0.0, eps, f0, df, nf, area, terms.data()),
                  std::invalid_argument);
}

TEST_CASE("simulate_bscan: zero contrast, no clutter, no noise is all zero") {
  Scene scene;
  scene.pipe_diameter_m = 0.0;
  scene.moist_region.radius_m = 0.0;
  const ContrastMap contrast = rasterize_scene(scene, small_grid());
  const BScan scan = simulate_bscan(contrast, small_config(), {});
  CHECK(fro_norm(scan.data) == 0.0);
  CHECK(scan.n_f() == 11);
  CHECK(scan.n_s() == 9);
}

TEST_CASE("simulate_bscan: single unit-contrast pixel equals the closed-form term") {
  ImagingGrid grid = small_grid();
  AcquisitionConfig config = small_config();
  config.f_min_hz = config.f_max_hz = 2e9;  // one frequency
  config.n_positions = 2;

  ContrastMap contrast{grid, cplx{3.03, -0.0606}, std::vector<cplx>(grid.n_pixels())};
  const int ix = 5, iz = 7;
  contrast.at(ix, iz) = cplx{1.0, 0.0};

  const BScan scan = simulate_bscan(contrast, config, {});
  const double r = antenna_pixel_distance(0.0, 0.0, grid, ix, iz);
  cplx term;
  born_terms_over_freq(r, contrast.eps_bg, 2e9, config.f_step_hz, 1, grid.cell_area(), &term);
  CHECK(std::abs(scan.data(0, 0) - term) <= 1e-14 * std::abs(term));
}

TEST_CASE("simulate_bscan: linearity in the contrast") {
  const ImagingGrid grid = small_grid();
  const AcquisitionConfig config = small_config();

  const ContrastMap c1 = rasterize_scene(moist_scene(0.25), grid);
  Scene s2 = moist_scene(0.0);
  s2.pipe_diameter_m = 0.0;
  ClutterPoint p;
  p.x_m = 0.3;
  p.z_m = 0.06;
  p.contrast = {0.7, 0.1};
  s2.clutter_points.push_back(p);
  const ContrastMap c2 = rasterize_scene(s2, grid);

  ContrastMap sum = c1;
  for (std::size_t i = 0; i < sum.chi.size(); ++i) sum.chi[i] += c2.chi[i];

  const BScan b1 = simulate_bscan(c1, config, {});
  const BScan b2 = simulate_bscan(c2, config, {});
  const BScan bs = simulate_bscan(sum, config, {});

  CMatrix lhs = bs.data;
  lhs -= b1.data;
  lhs -= b2.data;
  CHECK(fro_norm(lhs) <= 1e-12 * fro_norm(bs.data));
}

TEST_CASE("simulate_bscan: mirroring the scene mirrors the B-scan columns") {
  const ImagingGrid grid = small_grid();
  const AcquisitionConfig config = small_config();

  Scene scene = moist_scene(0.5);
  scene.moist_region.center_x_m = 0.4;  // off-center
  const ContrastMap cm = rasterize_scene(scene, grid);

  Scene mirrored = scene;
  mirrored.moist_region.center_x_m = (grid.x_min_m + grid.x_max_m) - 0.4;
  const ContrastMap cm2 = rasterize_scene(mirrored, grid);

  const BScan b1 = simulate_bscan(cm, config, {});
  const BScan b2 = simulate_bscan(cm2, config, {});

  double max_rel = 0.0;
  const double scale = fro_norm(b1.data);
  for (std::size_t i = 0; i < b1.n_f(); ++i)
    for (std::size_t a = 0; a < b1.n_s(); ++a)
      max_rel = std::max(max_rel,
                         std::abs(b1.data(i, a) - b2.data(i, b1.n_s() - 1 - a)) / scale);
  CHECK(max_rel < 1e-10);
}

TEST_CASE("simulate_bscan: pure clutter has numerical rank one") {
  Scene scene;
  scene.pipe_diameter_m = 0.0;
  scene.moist_region.radius_m = 0.0;
  const ContrastMap contrast = rasterize_scene(scene, small_grid());
  NoiseSpec noise;
  noise.clutter_gain = 2.5;
  const BScan scan = simulate_bscan(contrast, small_config(), noise);

  const SvdResult svd = svd_econ(scan.data);
  REQUIRE(svd.s.size() >= 2);
  CHECK(svd.s[0] > 0.0);
  CHECK(svd.s[1] / svd.s[0] < 1e-10);
  // sigma_1 of g * c d^T with ||c||=1, d = ones: g * sqrt(N_s)
  CHECK(svd.s[0] == doctest::Approx(2.5 * std::sqrt(9.0)).epsilon(1e-9));
}

TEST_CASE("simulate_bscan: determinism and noise level") {
  const ContrastMap contrast = rasterize_scene(moist_scene(0.5), small_grid());
  const AcquisitionConfig config = small_config();
  NoiseSpec noise;
  noise.snr_db = 10.0;
  noise.rng_seed = 77;

  const BScan a = simulate_bscan(contrast, config, noise);
  const BScan b = simulate_bscan(contrast, config, noise);
  CMatrix diff = a.data;
  diff -= b.data;
  CHECK(fro_norm(diff) == 0.0);

  noise.rng_seed = 78;
  const BScan c = simulate_bscan(contrast, config, noise);
  diff = a.data;
  diff -= c.data;
  CHECK(fro_norm(diff) > 0.0);

  // realized noise close to the requested -10 dB of signal RMS
  const BScan clean = simulate_bscan(contrast, config, {});
  CMatrix n = a.data;
  n -= clean.data;
  const double ratio = fro_norm(n) / fro_norm(clean.data);
  CHECK(ratio == doctest::Approx(std::pow(10.0, -0.5)).epsilon(0.15));
}

TEST_CASE("slice_band: full-span single band equals simulate_bscan") {
  const ContrastMap contrast = rasterize_scene(moist_scene(0.25), small_grid());
  const AcquisitionConfig config = small_config();
  NoiseSpec noise;
  noise.snr_db = 15.0;
  noise.clutter_gain = 0.1;
  noise.rng_seed = 5;

  const BandPlan plan = make_band_plan(config, 1, 10e6);
  const BScan sliced = slice_band(contrast, plan, 0, config, noise);
  const BScan direct = simulate_bscan(contrast, config, noise);
  CMatrix diff = sliced.data;
  diff -= direct.data;
  CHECK(fro_norm(diff) == 0.0);
  CHECK(sliced.freq_hz == direct.freq_hz);
  CHECK(sliced.pos_m == direct.pos_m);
}

TEST_CASE("slice_band: band axes and sizes") {
  AcquisitionConfig config;  // reference
  const ContrastMap contrast = rasterize_scene(moist_scene(0.25), small_grid());
  const BandPlan plan = make_band_plan(config, 16, 10e6);

  const BScan b0 = slice_band(contrast, plan, 0, config, {});
  const BScan b5 = slice_band(contrast, plan, 5, config, {});
  CHECK(b0.n_f() == 98);  // 2.425 GHz / 25 MHz + 1
  CHECK(b5.n_f() == 98);
  CHECK(b0.pos_m == b5.pos_m);
  CHECK(b0.freq_hz != b5.freq_hz);
  CHECK(b0.freq_hz.front() == doctest::Approx(1.2e9));
  CHECK(b5.freq_hz.front() == doctest::Approx(1.25e9));

  CHECK_THROWS_AS(slice_band(contrast, plan, 16, config, {}), std::runtime_error);
}
