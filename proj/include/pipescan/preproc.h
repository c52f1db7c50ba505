#pragma once

#include "pipescan/forward.h"

namespace pipescan {

struct ClutterReductionSpec {
  int n_remove = 1;
};

// Subtract the n_remove leading singular components of the B-scan matrix:
// S' = S - sum_{n < n_remove} sigma_n u_n v_n^H. Axes pass through unchanged.
BScan svd_clutter_reduce(const BScan& bscan, const ClutterReductionSpec& spec);

}  // namespace pipescan
