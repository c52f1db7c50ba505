#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pipescan/grid.h"
#include "pipescan/linalg.h"

namespace pipescan {

// Dielectric description of the background soil. Moisture maps to complex
// relative permittivity through the Topp polynomial on volumetric water
// content theta = 0.4 * sm (0.4 = saturation porosity).
struct SoilModel {
  enum class MoistureMap { topp_polynomial };

  double eps_bg_real = 3.03;      // dry background, equals the Topp value at theta = 0
  double loss_tangent_bg = 0.02;
  MoistureMap moisture_map_kind = MoistureMap::topp_polynomial;

  void validate() const;
  cplx eps_bg() const { return {eps_bg_real, -eps_bg_real * loss_tangent_bg}; }
};

struct MoistRegion {
  double center_x_m = 0.6;
  double center_z_m = 0.12;
  double radius_m = 0.0;   // 0 = no moist region
  double sm_fraction = 0.0;
};

struct ClutterPoint {
  enum class Kind { pebble, root };
  double x_m = 0.0;
  double z_m = 0.0;
  cplx contrast{0.0, 0.0};
  Kind kind = Kind::pebble;
};

enum class ClutterDensity { low, moderate, high };

// Parametric ground truth for one cross-section: buried pipe, an optional
// moist region around it, and optional discrete clutter scatterers.
struct Scene {
  SoilModel soil;
  double pipe_depth_m = 0.12;      // depth of the pipe axis
  double pipe_diameter_m = 0.045;
  bool pipe_filled = true;         // water-filled vs dry pipe
  MoistRegion moist_region;
  std::vector<ClutterPoint> clutter_points;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Complex contrast chi(p) = eps(p)/eps_bg - 1 on an imaging grid. Carries the
// reference background permittivity the contrast is relative to.
struct ContrastMap {
  ImagingGrid grid;
  cplx eps_bg{1.0, 0.0};
  std::vector<cplx> chi;  // size grid.n_pixels(), index p = iz*nx + ix

  cplx& at(int ix, int iz) { return chi[static_cast<std::size_t>(iz) * grid.nx + ix]; }
  const cplx& at(int ix, int iz) const {
    return chi[static_cast<std::size_t>(iz) * grid.nx + ix];
  }
};

// Complex relative permittivity of soil wetted to sm_fraction of saturation.
// Real part: Topp polynomial; imaginary part grows linearly with water content.
cplx moisture_to_permittivity(const SoilModel& soil, double sm_fraction);

// Pipe disk contrast per the weak-contrast stand-in: -0.5 dry, +2.0 water-filled.
cplx pipe_contrast(bool filled);

// Paint the scene onto the grid. The pipe disk is centered at the grid's
// x-midpoint; precedence where supports overlap is pipe > moist region >
// clutter. Clutter points land on the nearest pixel center.
ContrastMap rasterize_scene(const Scene& scene, const ImagingGrid& grid);

// Scatter `density`-many points (low:3, moderate:7, high:15) uniformly below
// the surface inside the grid footprint. Deterministic per seed.
Scene add_medium_clutter(const Scene& scene, ClutterPoint::Kind kind, ClutterDensity density,
                         std::uint64_t seed, const ImagingGrid& grid);

int clutter_point_count(ClutterDensity density);

std::string to_json(const Scene& scene);
Scene scene_from_json(const std::string& text);

}  // namespace pipescan
