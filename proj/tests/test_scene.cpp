#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "pipescan/scene.h"

using namespace pipescan;

TEST_CASE("moisture_to_permittivity: Topp polynomial endpoints") {
  SoilModel soil;
  soil.loss_tangent_bg = 0.0;

  // theta = 0
  CHECK(moisture_to_permittivity(soil, 0.0).real() == doctest::Approx(3.03).epsilon(1e-12));
  // theta = 0.4: 3.03 + 9.3*0.4 + 146*0.16 - 76.7*0.064 = 25.2012
  CHECK(moisture_to_permittivity(soil, 1.0).real() == doctest::Approx(25.2012).epsilon(1e-12));

  // midpoint strictly between the endpoints
  const double mid = moisture_to_permittivity(soil, 0.5).real();
  CHECK(mid > 3.03);
  CHECK(mid < 25.2012);

  CHECK_THROWS_AS(moisture_to_permittivity(soil, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(moisture_to_permittivity(soil, 1.1), std::invalid_argument);
}

TEST_CASE("moisture_to_permittivity real part strictly increasing; imag negative") {
  SoilModel soil;  // default loss tangent 0.02
  double prev = moisture_to_permittivity(soil, 0.0).real();
  for (int i = 1; i <= 200; ++i) {
    const cplx eps = moisture_to_permittivity(soil, i / 200.0);
    CHECK(eps.real() > prev);
    CHECK(eps.imag() < 0.0);
    prev = eps.real();
  }
}

TEST_CASE("rasterize_scene: empty scene is all zero") {
  Scene scene;
  scene.pipe_diameter_m = 0.0;
  scene.moist_region.radius_m = 0.0;
  ImagingGrid grid;
  const ContrastMap map = rasterize_scene(scene, grid);
  for (const cplx& v : map.chi) CHECK(v == cplx{0.0, 0.0});
}

TEST_CASE("rasterize_scene: single clutter point lights exactly one pixel") {
  Scene scene;
  scene.pipe_diameter_m = 0.0;
  scene.moist_region.radius_m = 0.0;
  ImagingGrid grid;
  ClutterPoint p;
  p.x_m = grid.x_center(10);
  p.z_m = grid.z_center(20);
  p.contrast = {0.5, 0.0};
  scene.clutter_points.push_back(p);

  const ContrastMap map = rasterize_scene(scene, grid);
  int nonzero = 0;
  for (const cplx& v : map.chi)
    if (v != cplx{0.0, 0.0}) ++nonzero;
  CHECK(nonzero == 1);
  CHECK(map.at(10, 20) == cplx{0.5, 0.0});
}

TEST_CASE("rasterize_scene: moist disk support equals brute-force containment scan") {
  Scene scene;
  scene.pipe_diameter_m = 0.0;
  scene.moist_region.center_x_m = 0.6;
  scene.moist_region.center_z_m = 0.15;
  ImagingGrid grid;
  scene.moist_region.radius_m = 3.0 * grid.dz();  // radius of three cells
  scene.moist_region.sm_fraction = 0.5;

  const ContrastMap map = rasterize_scene(scene, grid);

  int count = 0, expected = 0;
  for (int iz = 0; iz < grid.nz; ++iz)
    for (int ix = 0; ix < grid.nx; ++ix) {
      if (map.at(ix, iz) != cplx{0.0, 0.0}) ++count;
      const double dx = grid.x_center(ix) - scene.moist_region.center_x_m;
      const double dz = grid.z_center(iz) - scene.moist_region.center_z_m;
      if (dx * dx + dz * dz <= scene.moist_region.radius_m * scene.moist_region.radius_m)
        ++expected;
    }
  CHECK(count == expected);
  CHECK(count > 0);
}

TEST_CASE("rasterize_scene: support is the union of component supports") {
  Scene scene;  // default pipe + moist region
  scene.moist_region.radius_m = 0.09;
  scene.moist_region.sm_fraction = 0.75;
  ImagingGrid grid;
  ClutterPoint p;
  p.x_m = 0.2;
  p.z_m = 0.05;
  p.contrast = {1.5, 0.3};
  scene.clutter_points.push_back(p);

  const ContrastMap map = rasterize_scene(scene, grid);
  const double pipe_r = 0.5 * scene.pipe_diameter_m;
  const double pipe_cx = 0.5 * (grid.x_min_m + grid.x_max_m);

  for (int iz = 0; iz < grid.nz; ++iz)
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double x = grid.x_center(ix), z = grid.z_center(iz);
      const bool in_pipe = std::hypot(x - pipe_cx, z - scene.pipe_depth_m) <= pipe_r;
      const bool in_moist = std::hypot(x - scene.moist_region.center_x_m,
                                       z - scene.moist_region.center_z_m) <=
                            scene.moist_region.radius_m;
      const bool is_clutter_px = std::abs(x - p.x_m) <= 0.5 * grid.dx() &&
                                 std::abs(z - p.z_m) <= 0.5 * grid.dz();
      const bool nonzero = map.at(ix, iz) != cplx{0.0, 0.0};
      CHECK(nonzero == (in_pipe || in_moist || is_clutter_px));
    }
}

TEST_CASE("rasterize_scene: doubling resolution does not shrink the moist area") {
  Scene scene;
  scene.pipe_diameter_m = 0.0;
  scene.moist_region.radius_m = 0.06;
  scene.moist_region.sm_fraction = 0.5;
  scene.moist_region.center_z_m = 0.15;

  ImagingGrid coarse;
  ImagingGrid fine = coarse;
  fine.nx *= 2;
  fine.nz *= 2;

  auto area = [&](const ImagingGrid& g) {
    const ContrastMap m = rasterize_scene(scene, g);
    int nz = 0;
    for (const cplx& v : m.chi)
      if (v != cplx{0.0, 0.0}) ++nz;
    return nz * g.cell_area();
  };
  // one cell ring of the coarse grid bounds the discretization change
  const double ring = 2 * 3.14159265358979 * scene.moist_region.radius_m *
                      std::max(coarse.dx(), coarse.dz());
  CHECK(area(fine) >= area(coarse) - ring);
}

TEST_CASE("rasterize_scene: scatterer outside grid raises") {
  Scene scene;
  scene.pipe_diameter_m = 0.0;
  scene.moist_region.radius_m = 0.0;
  ClutterPoint p;
  p.x_m = 5.0;  // outside [0, 1.2]
  p.z_m = 0.1;
  scene.clutter_points.push_back(p);
  ImagingGrid grid;
  CHECK_THROWS_AS(rasterize_scene(scene, grid), std::invalid_argument);
}

TEST_CASE("add_medium_clutter: deterministic counts and placement") {
  Scene scene;
  ImagingGrid grid;

  const Scene a = add_medium_clutter(scene, ClutterPoint::Kind::root, ClutterDensity::low, 42, grid);
  const Scene b = add_medium_clutter(scene, ClutterPoint::Kind::root, ClutterDensity::low, 42, grid);
  REQUIRE(a.clutter_points.size() == 3);
  REQUIRE(b.clutter_points.size() == 3);
  for (std::size_t i = 0; i < a.clutter_points.size(); ++i) {
    CHECK(a.clutter_points[i].x_m == b.clutter_points[i].x_m);
    CHECK(a.clutter_points[i].z_m == b.clutter_points[i].z_m);
  }

  const Scene h =
      add_medium_clutter(scene, ClutterPoint::Kind::pebble, ClutterDensity::high, 1, grid);
  CHECK(h.clutter_points.size() == 15);
  for (const auto& c : h.clutter_points) {
    CHECK(c.z_m > 0.0);
    CHECK(c.x_m >= grid.x_min_m);
    CHECK(c.x_m <= grid.x_max_m);
    CHECK(c.contrast == cplx{0.5, 0.0});
  }

  const Scene r =
      add_medium_clutter(scene, ClutterPoint::Kind::root, ClutterDensity::moderate, 5, grid);
  CHECK(r.clutter_points.size() == 7);
  CHECK(r.clutter_points.front().contrast == cplx{1.5, 0.3});

  // different seeds move the points
  const Scene c2 =
      add_medium_clutter(scene, ClutterPoint::Kind::root, ClutterDensity::low, 43, grid);
  CHECK(c2.clutter_points.front().x_m != a.clutter_points.front().x_m);
}

TEST_CASE("scene JSON round trip") {
  Scene scene;
  scene.soil.eps_bg_real = 4.0;
  scene.soil.loss_tangent_bg = 0.05;
  scene.pipe_depth_m = 0.15;
  scene.pipe_filled = false;
  scene.moist_region.radius_m = 0.07;
  scene.moist_region.sm_fraction = 0.25;
  scene.rng_seed = 1234;
  ClutterPoint p;
  p.x_m = 0.3;
  p.z_m = 0.08;
  p.contrast = {1.5, 0.3};
  p.kind = ClutterPoint::Kind::root;
  scene.clutter_points.push_back(p);

  const Scene back = scene_from_json(to_json(scene));
  CHECK(back.soil.eps_bg_real == scene.soil.eps_bg_real);
  CHECK(back.soil.loss_tangent_bg == scene.soil.loss_tangent_bg);
  CHECK(back.pipe_depth_m == scene.pipe_depth_m);
  CHECK(back.pipe_filled == scene.pipe_filled);
  CHECK(back.moist_region.radius_m == scene.moist_region.radius_m);
  CHECK(back.rng_seed == scene.rng_seed);
  REQUIRE(back.clutter_points.size() == 1);
  CHECK(back.clutter_points[0].contrast == p.contrast);
  CHECK(back.clutter_points[0].kind == ClutterPoint::Kind::root);

  CHECK_THROWS_AS(scene_from_json("{not json"), std::invalid_argument);
}

TEST_CASE("pipe contrast constants") {
  CHECK(pipe_contrast(true) == cplx{2.0, 0.0});
  CHECK(pipe_contrast(false) == cplx{-0.5, 0.0});
}
