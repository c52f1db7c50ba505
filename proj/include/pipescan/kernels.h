#pragma once

#include <complex>
#include <cstddef>

namespace pipescan::kernels {

using cplx = std::complex<double>;

// Runtime-selectable arithmetic backend. Auto resolves to Avx2 when the CPU
// supports it, Scalar otherwise. The scalar kernels are the reference
// definitions; vector variants must agree with them to tight tolerance
// (see tests/test_kernels.cpp).
enum class Backend { Auto, Scalar, Avx2 };

bool avx2_supported();
void set_backend(Backend b);       // throws std::invalid_argument if unavailable
Backend active_backend();          // resolved backend (never Auto)
const char* backend_name(Backend b);

// Focal sum for one image pixel over a uniform frequency grid:
//   sum_a weight[a] * sum_i s[i*ns + a] * exp(j*(phase0[a] + i*dphase[a]))
// s is row-major with rows = frequency index (nf) and columns = antenna (ns).
// weight may be null (all ones).
cplx bpa_focal_sum(const cplx* s, std::size_t nf, std::size_t ns, const double* phase0,
                   const double* dphase, const double* weight);

// out += same-padded (zero boundary) 3x3 cross-correlation of in with k9:
//   out[y*w+x] += sum_{ky,kx} in[(y+ky-1)*w + (x+kx-1)] * k9[ky*3+kx]
void conv3x3_same_acc(const double* in, int h, int w, const double* k9, double* out);

// dw9[ky*3+kx] += sum_{y,x} in[(y+ky-1)*w + (x+kx-1)] * dout[y*w+x]
// (gradient of conv3x3_same_acc w.r.t. its kernel)
void conv3x3_wgrad_acc(const double* in, int h, int w, const double* dout, double* dw9);

// Squared Euclidean distance between two length-n vectors.
double l2sq(const double* a, const double* b, std::size_t n);

namespace detail {

cplx bpa_focal_sum_scalar(const cplx* s, std::size_t nf, std::size_t ns, const double* phase0,
                          const double* dphase, const double* weight);
void conv3x3_same_acc_scalar(const double* in, int h, int w, const double* k9, double* out);
void conv3x3_wgrad_acc_scalar(const double* in, int h, int w, const double* dout, double* dw9);
double l2sq_scalar(const double* a, const double* b, std::size_t n);

#if defined(PIPESCAN_AVX2_TU)
cplx bpa_focal_sum_avx2(const cplx* s, std::size_t nf, std::size_t ns, const double* phase0,
                        const double* dphase, const double* weight);
void conv3x3_same_acc_avx2(const double* in, int h, int w, const double* k9, double* out);
void conv3x3_wgrad_acc_avx2(const double* in, int h, int w, const double* dout, double* dw9);
double l2sq_avx2(const double* a, const double* b, std::size_t n);
#endif

}  // namespace detail

}  // namespace pipescan::kernels
