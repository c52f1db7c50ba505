#include "pipescan/kernels.h"

#include <atomic>
#include <stdexcept>

namespace pipescan::kernels {

namespace {
std::atomic<Backend> g_requested{Backend::Auto};
}

bool avx2_supported() {
#if defined(PIPESCAN_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

void set_backend(Backend b) {
  if (b == Backend::Avx2 && !avx2_supported())
    throw std::invalid_argument("kernels: AVX2 backend not available on this CPU/build");
  g_requested.store(b);
}

Backend active_backend() {
  const Backend b = g_requested.load();
  if (b != Backend::Auto) return b;
  return avx2_supported() ? Backend::Avx2 : Backend::Scalar;
}

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::Auto: return "auto";
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
  }
  return "?";
}

cplx bpa_focal_sum(const cplx* s, std::size_t nf, std::size_t ns, const double* phase0,
                   const double* dphase, const double* weight) {
#if defined(PIPESCAN_AVX2_TU)
  if (active_backend() == Backend::Avx2)
    return detail::bpa_focal_sum_avx2(s, nf, ns, phase0, dphase, weight);
#endif
  return detail::bpa_focal_sum_scalar(s, nf, ns, phase0, dphase, weight);
}

void conv3x3_same_acc(const double* in, int h, int w, const double* k9, double* out) {
#if defined(PIPESCAN_AVX2_TU)
  if (active_backend() == Backend::Avx2) {
    detail::conv3x3_same_acc_avx2(in, h, w, k9, out);
    return;
  }
#endif
  detail::conv3x3_same_acc_scalar(in, h, w, k9, out);
}

void conv3x3_wgrad_acc(const double* in, int h, int w, const double* dout, double* dw9) {
#if defined(PIPESCAN_AVX2_TU)
  if (active_backend() == Backend::Avx2) {
    detail::conv3x3_wgrad_acc_avx2(in, h, w, dout, dw9);
    return;
  }
#endif
  detail::conv3x3_wgrad_acc_scalar(in, h, w, dout, dw9);
}

double l2sq(const double* a, const double* b, std::size_t n) {
#if defined(PIPESCAN_AVX2_TU)
  if (active_backend() == Backend::Avx2) return detail::l2sq_avx2(a, b, n);
#endif
  return detail::l2sq_scalar(a, b, n);
}

}  // namespace pipescan::kernels
