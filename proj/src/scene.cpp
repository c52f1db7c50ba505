#include "pipescan/scene.h"

#include <cmath>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "pipescan/rng.h"

namespace pipescan {

namespace {
constexpr double kSaturationTheta = 0.4;  // volumetric water content at sm = 1
constexpr double kImagLossSlope = 0.3;    // added loss tangent per unit theta
}  // namespace

void SoilModel::validate() const {
  if (eps_bg_real < 1.0) throw std::invalid_argument("SoilModel: eps_bg_real must be >= 1");
  if (loss_tangent_bg < 0.0)
    throw std::invalid_argument("SoilModel: loss_tangent_bg must be >= 0");
}

void Scene::validate() const {
  soil.validate();
  if (pipe_diameter_m > 0.0 && pipe_depth_m <= 0.0)
    throw std::invalid_argument("Scene: pipe_depth_m must be > 0");
  if (moist_region.radius_m < 0.0)
    throw std::invalid_argument("Scene: moist region radius must be >= 0");
  if (moist_region.radius_m > 0.0 &&
      (moist_region.sm_fraction < 0.0 || moist_region.sm_fraction > 1.0))
    throw std::invalid_argument("Scene: sm_fraction must lie in [0,1]");
  for (const auto& c : clutter_points)
    if (c.z_m <= 0.0) throw std::invalid_argument("Scene: clutter points must be below surface");
}

cplx moisture_to_permittivity(const SoilModel& soil, double sm_fraction) {
  if (!(sm_fraction >= 0.0 && sm_fraction <= 1.0))
    throw std::invalid_argument("moisture_to_permittivity: sm_fraction outside [0,1]");
  const double theta = kSaturationTheta * sm_fraction;
  const double eps_re =
      3.03 + 9.3 * theta + 146.0 * theta * theta - 76.7 * theta * theta * theta;
  const double eps_im = -eps_re * (soil.loss_tangent_bg + kImagLossSlope * theta);
  return {eps_re, eps_im};
}

cplx pipe_contrast(bool filled) { return filled ? cplx{2.0, 0.0} : cplx{-0.5, 0.0}; }

ContrastMap rasterize_scene(const Scene& scene, const ImagingGrid& grid) {
  scene.validate();
  grid.validate();

  const cplx eps_bg = scene.soil.eps_bg();
  ContrastMap map{grid, eps_bg, std::vector<cplx>(grid.n_pixels(), cplx{0.0, 0.0})};

  const double pipe_cx = 0.5 * (grid.x_min_m + grid.x_max_m);
  const double pipe_cz = scene.pipe_depth_m;
  const double pipe_r = 0.5 * scene.pipe_diameter_m;
  const bool has_pipe = scene.pipe_diameter_m > 0.0;

  const MoistRegion& mr = scene.moist_region;
  const bool has_moist = mr.radius_m > 0.0;
  cplx chi_moist{0.0, 0.0};
  if (has_moist) {
    const cplx eps_moist = moisture_to_permittivity(scene.soil, mr.sm_fraction);
    chi_moist = eps_moist / eps_bg - 1.0;
  }

  if (has_pipe && (pipe_cz - pipe_r < grid.z_min_m || pipe_cz + pipe_r > grid.z_max_m))
    throw std::invalid_argument("rasterize_scene: pipe outside grid");
  if (has_moist &&
      (mr.center_x_m - mr.radius_m < grid.x_min_m || mr.center_x_m + mr.radius_m > grid.x_max_m ||
       mr.center_z_m + mr.radius_m > grid.z_max_m))
    throw std::invalid_argument("rasterize_scene: moist region outside grid");

  for (int iz = 0; iz < grid.nz; ++iz) {
    const double z = grid.z_center(iz);
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double x = grid.x_center(ix);
      if (has_pipe) {
        const double dxp = x - pipe_cx, dzp = z - pipe_cz;
        if (dxp * dxp + dzp * dzp <= pipe_r * pipe_r) {
          map.at(ix, iz) = pipe_contrast(scene.pipe_filled);
          continue;
        }
      }
      if (has_moist) {
        const double dxm = x - mr.center_x_m, dzm = z - mr.center_z_m;
        if (dxm * dxm + dzm * dzm <= mr.radius_m * mr.radius_m) map.at(ix, iz) = chi_moist;
      }
    }
  }

  for (const auto& c : scene.clutter_points) {
    // nearest pixel center == "within half a cell"
    const int ix = static_cast<int>(std::floor((c.x_m - grid.x_min_m) / grid.dx()));
    const int iz = static_cast<int>(std::floor((c.z_m - grid.z_min_m) / grid.dz()));
    if (ix < 0 || ix >= grid.nx || iz < 0 || iz >= grid.nz)
      throw std::invalid_argument("rasterize_scene: clutter point outside grid");
    if (map.at(ix, iz) == cplx{0.0, 0.0}) map.at(ix, iz) = c.contrast;
  }

  return map;
}

int clutter_point_count(ClutterDensity density) {
  switch (density) {
    case ClutterDensity::low: return 3;
    case ClutterDensity::moderate: return 7;
    case ClutterDensity::high: return 15;
  }
  throw std::invalid_argument("clutter_point_count: bad density");
}

Scene add_medium_clutter(const Scene& scene, ClutterPoint::Kind kind, ClutterDensity density,
                         std::uint64_t seed, const ImagingGrid& grid) {
  Scene out = scene;
  const int n = clutter_point_count(density);
  auto eng = make_engine(mix_seed(seed, 0x636c7574));  // "clut"
  std::uniform_real_distribution<double> ux(grid.x_min_m + grid.dx(), grid.x_max_m - grid.dx());
  // Roots and pebbles live in the upper soil column, above and around the
  // pipe; shallow scatterers dominate the response.
  const double z_lo = grid.z_min_m + grid.dz();
  const double z_hi = std::min(grid.z_max_m - grid.dz(), 0.5 * (grid.z_min_m + grid.z_max_m));
  std::uniform_real_distribution<double> uz(z_lo, z_hi);
  const cplx contrast =
      kind == ClutterPoint::Kind::pebble ? cplx{0.5, 0.0} : cplx{1.5, 0.3};
  for (int i = 0; i < n; ++i) {
    ClutterPoint p;
    p.x_m = ux(eng);
    p.z_m = uz(eng);
    p.contrast = contrast;
    p.kind = kind;
    out.clutter_points.push_back(p);
  }
  return out;
}

namespace {

nlohmann::json moist_to_json(const MoistRegion& m) {
  return {{"center_x_m", m.center_x_m},
          {"center_z_m", m.center_z_m},
          {"radius_m", m.radius_m},
          {"sm_fraction", m.sm_fraction}};
}

const char* kind_name(ClutterPoint::Kind k) {
  return k == ClutterPoint::Kind::pebble ? "pebble" : "root";
}

}  // namespace

std::string to_json(const Scene& scene) {
  nlohmann::json j;
  j["soil"] = {{"eps_bg_real", scene.soil.eps_bg_real},
               {"loss_tangent_bg", scene.soil.loss_tangent_bg},
               {"moisture_map_kind", "topp_polynomial"}};
  j["pipe_depth_m"] = scene.pipe_depth_m;
  j["pipe_diameter_m"] = scene.pipe_diameter_m;
  j["pipe_filled"] = scene.pipe_filled;
  j["moist_region"] = moist_to_json(scene.moist_region);
  j["clutter_points"] = nlohmann::json::array();
  for (const auto& c : scene.clutter_points)
    j["clutter_points"].push_back({{"x_m", c.x_m},
                                   {"z_m", c.z_m},
                                   {"contrast_re", c.contrast.real()},
                                   {"contrast_im", c.contrast.imag()},
                                   {"kind", kind_name(c.kind)}});
  j["rng_seed"] = scene.rng_seed;
  return j.dump(2);
}

Scene scene_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("scene_from_json: ") + e.what());
  }
  Scene s;
  if (j.contains("soil")) {
    const auto& js = j["soil"];
    s.soil.eps_bg_real = js.value("eps_bg_real", s.soil.eps_bg_real);
    s.soil.loss_tangent_bg = js.value("loss_tangent_bg", s.soil.loss_tangent_bg);
    if (js.value("moisture_map_kind", "topp_polynomial") != std::string("topp_polynomial"))
      throw std::invalid_argument("scene_from_json: unknown moisture_map_kind");
  }
  s.pipe_depth_m = j.value("pipe_depth_m", s.pipe_depth_m);
  s.pipe_diameter_m = j.value("pipe_diameter_m", s.pipe_diameter_m);
  s.pipe_filled = j.value("pipe_filled", s.pipe_filled);
  if (j.contains("moist_region")) {
    const auto& jm = j["moist_region"];
    s.moist_region.center_x_m = jm.value("center_x_m", 0.6);
    s.moist_region.center_z_m = jm.value("center_z_m", 0.12);
    s.moist_region.radius_m = jm.value("radius_m", 0.0);
    s.moist_region.sm_fraction = jm.value("sm_fraction", 0.0);
  }
  if (j.contains("clutter_points"))
    for (const auto& jc : j["clutter_points"]) {
      ClutterPoint c;
      c.x_m = jc.at("x_m").get<double>();
      c.z_m = jc.at("z_m").get<double>();
      c.contrast = {jc.value("contrast_re", 0.0), jc.value("contrast_im", 0.0)};
      c.kind = jc.value("kind", "pebble") == std::string("root") ? ClutterPoint::Kind::root
                                                                 : ClutterPoint::Kind::pebble;
      s.clutter_points.push_back(c);
    }
  s.rng_seed = j.value("rng_seed", std::uint64_t{0});
  s.validate();
  return s;
}

}  // namespace pipescan
