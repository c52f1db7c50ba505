#pragma once

#include <cstddef>
#include <stdexcept>

namespace pipescan {

// Rectangular pixel grid over the subsurface cross-section. x runs along the
// scan line, z is depth below the surface (z >= 0). Pixels are cell-centered;
// index p = iz * nx + ix.
struct ImagingGrid {
  double x_min_m = 0.0;
  double x_max_m = 1.2;
  double z_min_m = 0.0;
  double z_max_m = 0.4;
  int nx = 96;
  int nz = 96;

  void validate() const {
    if (nx < 2 || nz < 2) throw std::invalid_argument("ImagingGrid: nx, nz must be >= 2");
    if (!(x_min_m < x_max_m) || !(z_min_m < z_max_m))
      throw std::invalid_argument("ImagingGrid: empty extent");
    if (z_min_m < 0.0) throw std::invalid_argument("ImagingGrid: z_min_m must be >= 0 (subsurface)");
  }

  double dx() const { return (x_max_m - x_min_m) / nx; }
  double dz() const { return (z_max_m - z_min_m) / nz; }
  double cell_area() const { return dx() * dz(); }
  double x_center(int ix) const { return x_min_m + (ix + 0.5) * dx(); }
  double z_center(int iz) const { return z_min_m + (iz + 0.5) * dz(); }
  std::size_t n_pixels() const { return static_cast<std::size_t>(nx) * nz; }

  bool operator==(const ImagingGrid&) const = default;
};

}  // namespace pipescan
