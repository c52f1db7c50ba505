#include "pipescan/forward.h"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "pipescan/rng.h"

namespace pipescan {

namespace {
constexpr double kPi = std::numbers::pi;
}

void BScan::validate() const {
  if (data.rows() != freq_hz.size() || data.cols() != pos_m.size())
    throw std::invalid_argument("BScan: axis lengths do not match data shape");
  if (!all_finite(data)) throw std::invalid_argument("BScan: non-finite entries");
}

cplx background_wavenumber(double f_hz, cplx eps_bg) {
  if (!(f_hz > 0.0)) throw std::invalid_argument("background_wavenumber: f_hz must be > 0");
  return 2.0 * kPi * f_hz * std::sqrt(eps_bg) / kSpeedOfLight;
}

void born_terms_over_freq(double r, cplx eps_bg, double f0_hz, double f_step_hz,
                          std::size_t n_f, double cell_area, cplx* terms) {
  if (!(r > 0.0))
    throw std::invalid_argument(
        "born_terms_over_freq: r must be > 0 (antenna collocated with a pixel center?)");
  const cplx kappa = 2.0 * kPi * std::sqrt(eps_bg) / kSpeedOfLight;  // k = kappa * f
  const double spread = cell_area / ((4.0 * kPi * r) * (4.0 * kPi * r));
  const cplx j2r = cplx(0.0, -2.0) * kappa * r;
  cplx term = spread * std::exp(j2r * f0_hz);
  const cplx step = std::exp(j2r * f_step_hz);
  for (std::size_t i = 0; i < n_f; ++i) {
    terms[i] = term;
    term *= step;
  }
}

std::vector<double> clutter_frequency_profile(std::size_t n_f) {
  std::vector<double> c(n_f, 1.0);
  if (n_f > 1)
    for (std::size_t i = 0; i < n_f; ++i)
      c[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / (n_f - 1)));
  double norm = 0.0;
  for (double v : c) norm += v * v;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (double& v : c) v /= norm;
  return c;
}

BScan simulate_bscan(const ContrastMap& contrast, const AcquisitionConfig& config,
                     const NoiseSpec& noise) {
  if (noise.clutter_gain < 0.0)
    throw std::invalid_argument("simulate_bscan: clutter_gain must be >= 0");
  contrast.grid.validate();
  config.validate();

  BScan out;
  out.freq_hz = frequency_grid(config);
  out.pos_m = scan_positions(config);
  const std::size_t nf = out.freq_hz.size();
  const std::size_t ns = out.pos_m.size();
  out.data = CMatrix(nf, ns);
  out.provenance = "simulate_bscan";

  const ImagingGrid& grid = contrast.grid;

  // Nonzero contrast support; summing over it in ascending pixel order keeps
  // the accumulation identical to the full-grid Born operator matvec.
  std::vector<std::size_t> support;
  support.reserve(256);
  for (std::size_t p = 0; p < contrast.chi.size(); ++p)
    if (contrast.chi[p] != cplx{0.0, 0.0}) support.push_back(p);

  std::vector<cplx> terms(nf);
#pragma omp parallel for schedule(static) firstprivate(terms)
  for (int a = 0; a < static_cast<int>(ns); ++a) {
    const double xa = out.pos_m[a];
    for (const std::size_t p : support) {
      const int ix = static_cast<int>(p) % grid.nx;
      const int iz = static_cast<int>(p) / grid.nx;
      const double r = antenna_pixel_distance(xa, config.antenna_height_m, grid, ix, iz);
      born_terms_over_freq(r, contrast.eps_bg, config.f_min_hz, config.f_step_hz, nf,
                           grid.cell_area(), terms.data());
      const cplx chi = contrast.chi[p];
      for (std::size_t i = 0; i < nf; ++i) out.data(i, a) += chi * terms[i];
    }
  }

  // Scattered-field RMS sets the noise scale before clutter is added.
  double signal_rms = fro_norm(out.data) / std::sqrt(static_cast<double>(nf * ns));

  if (noise.clutter_gain > 0.0) {
    const std::vector<double> cf = clutter_frequency_profile(nf);
    for (std::size_t i = 0; i < nf; ++i) {
      const cplx v = noise.clutter_gain * cf[i];
      for (std::size_t a = 0; a < ns; ++a) out.data(i, a) += v;
    }
  }

  if (std::isfinite(noise.snr_db) && signal_rms > 0.0) {
    const double sigma = signal_rms * std::pow(10.0, -noise.snr_db / 20.0);
    auto eng = make_engine(mix_seed(noise.rng_seed, 0x6e6f6973));  // "nois"
    std::normal_distribution<double> gauss(0.0, sigma / std::sqrt(2.0));
    for (std::size_t i = 0; i < nf; ++i)
      for (std::size_t a = 0; a < ns; ++a) out.data(i, a) += cplx(gauss(eng), gauss(eng));
  }

  return out;
}

BScan slice_band(const ContrastMap& contrast, const BandPlan& plan, int band_index,
                 const AcquisitionConfig& config, const NoiseSpec& noise) {
  if (band_index < 0 || band_index >= plan.n_bands)
    throw std::runtime_error("slice_band: band index outside plan");
  const AcquisitionConfig bc = band_config(config, plan.bands[band_index]);
  NoiseSpec bn = noise;
  bn.rng_seed = mix_seed(noise.rng_seed, static_cast<std::uint64_t>(band_index));
  BScan out = simulate_bscan(contrast, bc, bn);
  out.provenance = "slice_band:" + std::to_string(band_index);
  return out;
}

}  // namespace pipescan
