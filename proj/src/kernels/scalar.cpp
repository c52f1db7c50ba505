#include "pipescan/kernels.h"

#include <cmath>

// Reference kernels. Straight-line definitions of the arithmetic; the AVX2
// variants in avx2.cpp are checked against these.

namespace pipescan::kernels::detail {

cplx bpa_focal_sum_scalar(const cplx* s, std::size_t nf, std::size_t ns, const double* phase0,
                          const double* dphase, const double* weight) {
  cplx total{0.0, 0.0};
  for (std::size_t a = 0; a < ns; ++a) {
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i < nf; ++i) {
      const double phi = phase0[a] + static_cast<double>(i) * dphase[a];
      acc += s[i * ns + a] * cplx(std::cos(phi), std::sin(phi));
    }
    total += (weight ? weight[a] : 1.0) * acc;
  }
  return total;
}

void conv3x3_same_acc_scalar(const double* in, int h, int w, const double* k9, double* out) {
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int ky = 0; ky < 3; ++ky) {
        const int yy = y + ky - 1;
        if (yy < 0 || yy >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int xx = x + kx - 1;
          if (xx < 0 || xx >= w) continue;
          acc += in[yy * w + xx] * k9[ky * 3 + kx];
        }
      }
      out[y * w + x] += acc;
    }
  }
}

void conv3x3_wgrad_acc_scalar(const double* in, int h, int w, const double* dout, double* dw9) {
  for (int ky = 0; ky < 3; ++ky) {
    for (int kx = 0; kx < 3; ++kx) {
      double acc = 0.0;
      for (int y = 0; y < h; ++y) {
        const int yy = y + ky - 1;
        if (yy < 0 || yy >= h) continue;
        for (int x = 0; x < w; ++x) {
          const int xx = x + kx - 1;
          if (xx < 0 || xx >= w) continue;
          acc += in[yy * w + xx] * dout[y * w + x];
        }
      }
      dw9[ky * 3 + kx] += acc;
    }
  }
}

double l2sq_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace pipescan::kernels::detail
