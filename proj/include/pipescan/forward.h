#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pipescan/acquisition.h"
#include "pipescan/linalg.h"
#include "pipescan/scene.h"

namespace pipescan {

// Complex SFCW B-scan: rows = frequency points, columns = scan positions.
struct BScan {
  CMatrix data;
  std::vector<double> freq_hz;
  std::vector<double> pos_m;
  std::string provenance;

  std::size_t n_f() const { return data.rows(); }
  std::size_t n_s() const { return data.cols(); }
  void validate() const;
};

struct NoiseSpec {
  double snr_db = std::numeric_limits<double>::infinity();  // inf = noiseless
  double clutter_gain = 0.0;  // scale of the rank-1 direct-coupling term
  std::uint64_t rng_seed = 0;
};

inline constexpr double kSpeedOfLight = 299792458.0;

// Distance from a monostatic antenna at (x_a, -height) to the center of pixel
// (ix, iz). Shared by the simulator, the Born operator assembly, and BPA so
// all three see identical geometry.
inline double antenna_pixel_distance(double x_a, double antenna_height_m,
                                     const ImagingGrid& grid, int ix, int iz) {
  const double dx = x_a - grid.x_center(ix);
  const double dz = antenna_height_m + grid.z_center(iz);
  return std::sqrt(dx * dx + dz * dz);
}

// k = 2*pi*f*sqrt(eps)/c, principal root (Re >= 0, Im <= 0 for lossy media).
cplx background_wavenumber(double f_hz, cplx eps_bg);

// Born scattering terms for one (antenna, pixel) pair over a uniform
// frequency grid: terms[i] = G(r; k_i)^2 * cell_area with
// G(r; k) = exp(-j k r) / (4 pi r). This one function is the kernel shared by
// the simulator and the Born operator assembly; both see identical values.
void born_terms_over_freq(double r, cplx eps_bg, double f0_hz, double f_step_hz,
                          std::size_t n_f, double cell_area, cplx* terms);

// Monostatic Born B-scan of a contrast map plus rank-1 clutter and receiver
// noise. Deterministic for a fixed NoiseSpec seed.
BScan simulate_bscan(const ContrastMap& contrast, const AcquisitionConfig& config,
                     const NoiseSpec& noise);

// Simulate the band_index-th band of the plan as a consistent view of the
// same scene (seed derived from noise.rng_seed and the band index; band 0 of
// a single-band plan reproduces simulate_bscan exactly).
BScan slice_band(const ContrastMap& contrast, const BandPlan& plan, int band_index,
                 const AcquisitionConfig& config, const NoiseSpec& noise);

// Unit-norm raised-cosine frequency profile of the rank-1 clutter term.
std::vector<double> clutter_frequency_profile(std::size_t n_f);

}  // namespace pipescan
