#include "pipescan/preproc.h"

#include <algorithm>
#include <stdexcept>

namespace pipescan {

BScan svd_clutter_reduce(const BScan& bscan, const ClutterReductionSpec& spec) {
  bscan.validate();
  const std::size_t k = std::min(bscan.n_f(), bscan.n_s());
  if (spec.n_remove < 0 || static_cast<std::size_t>(spec.n_remove) > k)
    throw std::invalid_argument("svd_clutter_reduce: n_remove outside [0, min(N_f, N_s)]");

  BScan out = bscan;
  out.provenance = bscan.provenance + "|svd_clutter_reduce:" + std::to_string(spec.n_remove);
  if (spec.n_remove == 0) return out;

  const SvdResult svd = svd_econ(bscan.data);
  for (int n = 0; n < spec.n_remove; ++n)
    subtract_rank1(out.data, svd, static_cast<std::size_t>(n));
  return out;
}

}  // namespace pipescan
