#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pipescan/forward.h"
#include "pipescan/grid.h"
#include "pipescan/linalg.h"

namespace pipescan {

// Nonnegative magnitude image over the cross-section, max-normalized to 1
// when nonzero.
struct Image {
  ImagingGrid grid;
  std::vector<double> values;  // index p = iz*nx + ix

  double& at(int ix, int iz) { return values[static_cast<std::size_t>(iz) * grid.nx + ix]; }
  const double& at(int ix, int iz) const {
    return values[static_cast<std::size_t>(iz) * grid.nx + ix];
  }
  void validate() const;
};

struct TruncationSpec {
  enum class Mode { rank, relative_threshold };
  Mode mode = Mode::relative_threshold;
  int rank = 1;
  double tau = 1e-2;

  static TruncationSpec by_rank(int r);
  static TruncationSpec by_tau(double t);
  void validate() const;
};

// Back-projection: I(p) = | sum_i sum_a S(f_i, x_a) w(r_ap) exp(+2j Re(k_i) r_ap) |.
// Only the real part of k enters the phase; w = 1, or (4 pi r)^2 when
// spreading_comp compensates the round-trip spreading loss.
Image bpa_image(const BScan& bscan, const ImagingGrid& grid, cplx eps_bg, bool spreading_comp,
                double antenna_height_m = 0.0);

// Complex focal sum at one pixel (the quantity whose modulus BPA images).
cplx bpa_focal_sum_at(const BScan& bscan, const ImagingGrid& grid, cplx eps_bg,
                      bool spreading_comp, double antenna_height_m, int ix, int iz);

// Born operator A[(i,a), p] = G(r_ap; k_i)^2 * cell_area, rows ordered with
// the antenna index fastest: row = i * N_s + a. vec(S) = A vec(chi) holds
// exactly for the simulator's scattered term.
CMatrix assemble_born_operator(const ImagingGrid& grid, const AcquisitionConfig& config,
                               cplx eps_bg);

// x = sum_{kept} (u_n^H b / sigma_n) v_n. kept = first `rank` components, or
// those with sigma_n >= tau * sigma_1. If everything is truncated the zero
// vector is returned and *all_truncated is set.
std::vector<cplx> truncated_svd_solve(const CMatrix& a, const std::vector<cplx>& b,
                                      const TruncationSpec& spec, bool* all_truncated = nullptr);
std::vector<cplx> truncated_svd_solve(const SvdResult& svd, const std::vector<cplx>& b,
                                      const TruncationSpec& spec, bool* all_truncated = nullptr);

// Born-approximation inversion with a cached operator factorization; build
// once per (grid, band) and reuse across scenes.
class BornInverter {
 public:
  BornInverter(const ImagingGrid& grid, const AcquisitionConfig& config, cplx eps_bg);

  Image invert(const BScan& bscan, const TruncationSpec& spec) const;
  const SvdResult& factorization() const { return svd_; }

 private:
  ImagingGrid grid_;
  SvdResult svd_;
};

// One-shot BAA image (assembles and factorizes the operator per call).
Image baa_image(const BScan& bscan, const ImagingGrid& grid, const AcquisitionConfig& config,
                cplx eps_bg, const TruncationSpec& spec);

// Bilinear resample to out_nx x out_nz (used to bring any stage's matrix to
// the classifier input size).
Image resample_bilinear(const Image& src, int out_nx, int out_nz);

// |S| of a B-scan as an Image (rows -> z axis, columns -> x axis).
Image magnitude_image(const BScan& bscan);

Image max_normalize(Image img);

}  // namespace pipescan
