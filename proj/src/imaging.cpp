#include "pipescan/imaging.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pipescan/kernels.h"

namespace pipescan {

namespace {
constexpr double kPi = std::numbers::pi;

// BPA relies on the row axis being a uniform frequency progression.
void check_uniform(const std::vector<double>& f) {
  if (f.empty()) throw std::invalid_argument("bpa: empty frequency axis");
  if (f.size() == 1) return;
  const double step = f[1] - f[0];
  for (std::size_t i = 1; i < f.size(); ++i)
    if (std::abs((f[i] - f[i - 1]) - step) > 1e-6 * std::max(1.0, std::abs(step)))
      throw std::invalid_argument("bpa: frequency axis is not uniform");
}
}  // namespace

void Image::validate() const {
  grid.validate();
  if (values.size() != grid.n_pixels())
    throw std::invalid_argument("Image: value count does not match grid");
  for (double v : values)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("Image: values must be finite and nonnegative");
}

TruncationSpec TruncationSpec::by_rank(int r) {
  TruncationSpec s;
  s.mode = Mode::rank;
  s.rank = r;
  s.validate();
  return s;
}

TruncationSpec TruncationSpec::by_tau(double t) {
  TruncationSpec s;
  s.mode = Mode::relative_threshold;
  s.tau = t;
  s.validate();
  return s;
}

void TruncationSpec::validate() const {
  if (mode == Mode::rank && rank < 1)
    throw std::invalid_argument("TruncationSpec: rank must be >= 1");
  if (mode == Mode::relative_threshold && !(tau > 0.0 && tau <= 1.0))
    throw std::invalid_argument("TruncationSpec: tau must lie in (0, 1]");
}

Image max_normalize(Image img) {
  double peak = 0.0;
  for (double v : img.values) peak = std::max(peak, v);
  if (peak > 0.0)
    for (double& v : img.values) v /= peak;
  return img;
}

cplx bpa_focal_sum_at(const BScan& bscan, const ImagingGrid& grid, cplx eps_bg,
                      bool spreading_comp, double antenna_height_m, int ix, int iz) {
  const std::size_t nf = bscan.n_f();
  const std::size_t ns = bscan.n_s();
  // Re(k) = phase_rate * f
  const double phase_rate = 2.0 * kPi * std::sqrt(eps_bg).real() / kSpeedOfLight;
  const double f0 = bscan.freq_hz.front();
  const double df = nf > 1 ? bscan.freq_hz[1] - bscan.freq_hz[0] : 0.0;

  std::vector<double> phase0(ns), dphase(ns), weight(spreading_comp ? ns : 0);
  for (std::size_t a = 0; a < ns; ++a) {
    const double r = antenna_pixel_distance(bscan.pos_m[a], antenna_height_m, grid, ix, iz);
    if (!(r > 0.0)) throw std::invalid_argument("bpa: antenna collocated with a pixel center");
    phase0[a] = 2.0 * phase_rate * f0 * r;
    dphase[a] = 2.0 * phase_rate * df * r;
    if (spreading_comp) weight[a] = (4.0 * kPi * r) * (4.0 * kPi * r);
  }
  return kernels::bpa_focal_sum(bscan.data.data(), nf, ns, phase0.data(), dphase.data(),
                                spreading_comp ? weight.data() : nullptr);
}

Image bpa_image(const BScan& bscan, const ImagingGrid& grid, cplx eps_bg, bool spreading_comp,
                double antenna_height_m) {
  bscan.validate();
  grid.validate();
  check_uniform(bscan.freq_hz);

  Image img{grid, std::vector<double>(grid.n_pixels(), 0.0)};
#pragma omp parallel for schedule(static)
  for (int iz = 0; iz < grid.nz; ++iz)
    for (int ix = 0; ix < grid.nx; ++ix)
      img.at(ix, iz) =
          std::abs(bpa_focal_sum_at(bscan, grid, eps_bg, spreading_comp, antenna_height_m, ix, iz));

  return max_normalize(std::move(img));
}

CMatrix assemble_born_operator(const ImagingGrid& grid, const AcquisitionConfig& config,
                               cplx eps_bg) {
  grid.validate();
  config.validate();
  const std::vector<double> freqs = frequency_grid(config);
  const std::vector<double> pos = scan_positions(config);
  const std::size_t nf = freqs.size();
  const std::size_t ns = pos.size();
  const std::size_t np = grid.n_pixels();

  CMatrix a(nf * ns, np);
  std::vector<cplx> terms(nf);
#pragma omp parallel for schedule(static) firstprivate(terms)
  for (int pa = 0; pa < static_cast<int>(ns); ++pa) {
    for (std::size_t p = 0; p < np; ++p) {
      const int ix = static_cast<int>(p) % grid.nx;
      const int iz = static_cast<int>(p) / grid.nx;
      const double r = antenna_pixel_distance(pos[pa], config.antenna_height_m, grid, ix, iz);
      born_terms_over_freq(r, eps_bg, config.f_min_hz, config.f_step_hz, nf, grid.cell_area(),
                           terms.data());
      for (std::size_t i = 0; i < nf; ++i) a(i * ns + pa, p) = terms[i];
    }
  }
  return a;
}

std::vector<cplx> truncated_svd_solve(const SvdResult& svd, const std::vector<cplx>& b,
                                      const TruncationSpec& spec, bool* all_truncated) {
  spec.validate();
  if (b.size() != svd.u.rows()) throw std::invalid_argument("truncated_svd_solve: dimension mismatch");
  const std::size_t k = svd.s.size();

  std::size_t kept = 0;
  if (spec.mode == TruncationSpec::Mode::rank) {
    kept = std::min<std::size_t>(static_cast<std::size_t>(spec.rank), k);
  } else {
    const double cut = spec.tau * (k ? svd.s[0] : 0.0);
    while (kept < k && svd.s[kept] >= cut && svd.s[kept] > 0.0) ++kept;
  }
  if (all_truncated) *all_truncated = (kept == 0);

  std::vector<cplx> x(svd.vh.cols(), cplx{0.0, 0.0});
  for (std::size_t n = 0; n < kept; ++n) {
    if (svd.s[n] <= 0.0) break;
    cplx coef{0.0, 0.0};
    for (std::size_t i = 0; i < svd.u.rows(); ++i) coef += std::conj(svd.u(i, n)) * b[i];
    coef /= svd.s[n];
    const cplx* vh = svd.vh.row(n);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] += coef * std::conj(vh[j]);
  }
  return x;
}

std::vector<cplx> truncated_svd_solve(const CMatrix& a, const std::vector<cplx>& b,
                                      const TruncationSpec& spec, bool* all_truncated) {
  return truncated_svd_solve(svd_econ(a), b, spec, all_truncated);
}

BornInverter::BornInverter(const ImagingGrid& grid, const AcquisitionConfig& config, cplx eps_bg)
    : grid_(grid), svd_(svd_econ(assemble_born_operator(grid, config, eps_bg))) {}

Image BornInverter::invert(const BScan& bscan, const TruncationSpec& spec) const {
  bscan.validate();
  const std::size_t m = bscan.n_f() * bscan.n_s();
  if (m != svd_.u.rows())
    throw std::invalid_argument("BornInverter: B-scan shape does not match the operator");
  // vec(S) with the antenna index fastest, matching the operator's row order.
  std::vector<cplx> b(m);
  for (std::size_t i = 0; i < bscan.n_f(); ++i)
    for (std::size_t a = 0; a < bscan.n_s(); ++a) b[i * bscan.n_s() + a] = bscan.data(i, a);

  const std::vector<cplx> x = truncated_svd_solve(svd_, b, spec);
  Image img{grid_, std::vector<double>(grid_.n_pixels())};
  for (std::size_t p = 0; p < x.size(); ++p) img.values[p] = std::abs(x[p]);
  return max_normalize(std::move(img));
}

Image baa_image(const BScan& bscan, const ImagingGrid& grid, const AcquisitionConfig& config,
                cplx eps_bg, const TruncationSpec& spec) {
  const BornInverter inv(grid, config, eps_bg);
  return inv.invert(bscan, spec);
}

Image resample_bilinear(const Image& src, int out_nx, int out_nz) {
  if (out_nx < 1 || out_nz < 1) throw std::invalid_argument("resample_bilinear: bad output size");
  Image dst;
  dst.grid = src.grid;
  dst.grid.nx = out_nx;
  dst.grid.nz = out_nz;
  dst.values.assign(static_cast<std::size_t>(out_nx) * out_nz, 0.0);

  const int nx = src.grid.nx, nz = src.grid.nz;
  for (int oz = 0; oz < out_nz; ++oz) {
    // map output pixel centers onto input pixel-center coordinates
    const double fz = (oz + 0.5) * nz / out_nz - 0.5;
    const int z0 = std::clamp(static_cast<int>(std::floor(fz)), 0, nz - 1);
    const int z1 = std::min(z0 + 1, nz - 1);
    const double wz = std::clamp(fz - z0, 0.0, 1.0);
    for (int ox = 0; ox < out_nx; ++ox) {
      const double fx = (ox + 0.5) * nx / out_nx - 0.5;
      const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, nx - 1);
      const int x1 = std::min(x0 + 1, nx - 1);
      const double wx = std::clamp(fx - x0, 0.0, 1.0);
      const double v = (1 - wz) * ((1 - wx) * src.at(x0, z0) + wx * src.at(x1, z0)) +
                       wz * ((1 - wx) * src.at(x0, z1) + wx * src.at(x1, z1));
      dst.at(ox, oz) = v;
    }
  }
  return dst;
}

Image magnitude_image(const BScan& bscan) {
  Image img;
  img.grid.x_min_m = bscan.pos_m.front();
  img.grid.x_max_m = std::max(bscan.pos_m.back(), bscan.pos_m.front() + 1e-9);
  img.grid.z_min_m = 0.0;
  img.grid.z_max_m = 1.0;  // synthetic axis: rows are frequency samples
  img.grid.nx = static_cast<int>(bscan.n_s());
  img.grid.nz = static_cast<int>(bscan.n_f());
  img.values.resize(bscan.data.size());
  for (std::size_t i = 0; i < bscan.n_f(); ++i)
    for (std::size_t a = 0; a < bscan.n_s(); ++a)
      img.values[i * bscan.n_s() + a] = std::abs(bscan.data(i, a));
  return img;
}

}  // namespace pipescan
