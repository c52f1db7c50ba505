#include "pipescan/kernels.h"

#if defined(PIPESCAN_AVX2_TU)

#include <immintrin.h>

#include <cmath>
#include <vector>

namespace pipescan::kernels::detail {

namespace {

// Packed complex multiply for two interleaved complex doubles per register.
inline __m256d cmul(__m256d a, __m256d b) {
  const __m256d b_re = _mm256_movedup_pd(b);
  const __m256d b_im = _mm256_unpackhi_pd(b, b);
  const __m256d a_sw = _mm256_permute_pd(a, 0x5);
  return _mm256_fmaddsub_pd(a, b_re, _mm256_mul_pd(a_sw, b_im));
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Per-antenna phasor recurrence for one antenna; used for the odd tail.
inline cplx focal_sum_one(const cplx* s, std::size_t nf, std::size_t ns, std::size_t a,
                          double phase0, double dphase, double weight) {
  cplx phasor(std::cos(phase0), std::sin(phase0));
  const cplx rot(std::cos(dphase), std::sin(dphase));
  cplx acc{0.0, 0.0};
  for (std::size_t i = 0; i < nf; ++i) {
    acc += s[i * ns + a] * phasor;
    phasor *= rot;
  }
  return weight * acc;
}

}  // namespace

cplx bpa_focal_sum_avx2(const cplx* s, std::size_t nf, std::size_t ns, const double* phase0,
                        const double* dphase, const double* weight) {
  const double* sd = reinterpret_cast<const double*>(s);
  cplx total{0.0, 0.0};
  std::size_t a = 0;
  for (; a + 2 <= ns; a += 2) {
    // Phasor advances by exp(j*dphase) per frequency step; the per-frequency
    // trig is replaced by one complex multiply per step.
    __m256d phasor = _mm256_setr_pd(std::cos(phase0[a]), std::sin(phase0[a]),
                                    std::cos(phase0[a + 1]), std::sin(phase0[a + 1]));
    const __m256d rot = _mm256_setr_pd(std::cos(dphase[a]), std::sin(dphase[a]),
                                       std::cos(dphase[a + 1]), std::sin(dphase[a + 1]));
    __m256d acc = _mm256_setzero_pd();
    const double* row = sd + 2 * a;
    for (std::size_t i = 0; i < nf; ++i, row += 2 * ns) {
      const __m256d sv = _mm256_loadu_pd(row);
      acc = _mm256_add_pd(acc, cmul(sv, phasor));
      phasor = cmul(phasor, rot);
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    const double w0 = weight ? weight[a] : 1.0;
    const double w1 = weight ? weight[a + 1] : 1.0;
    total += cplx(w0 * lanes[0], w0 * lanes[1]);
    total += cplx(w1 * lanes[2], w1 * lanes[3]);
  }
  for (; a < ns; ++a)
    total += focal_sum_one(s, nf, ns, a, phase0[a], dphase[a], weight ? weight[a] : 1.0);
  return total;
}

namespace {

// Zero-padded copy of in with a one-pixel border, so all 3x3 taps are valid.
thread_local std::vector<double> g_pad;

const double* padded(const double* in, int h, int w) {
  const int pw = w + 2;
  g_pad.assign(static_cast<std::size_t>(h + 2) * pw, 0.0);
  for (int y = 0; y < h; ++y) {
    double* dst = g_pad.data() + static_cast<std::size_t>(y + 1) * pw + 1;
    const double* src = in + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) dst[x] = src[x];
  }
  return g_pad.data();
}

}  // namespace

void conv3x3_same_acc_avx2(const double* in, int h, int w, const double* k9, double* out) {
  const double* p = padded(in, h, w);
  const int pw = w + 2;
  __m256d kv[9];
  for (int t = 0; t < 9; ++t) kv[t] = _mm256_set1_pd(k9[t]);
  for (int y = 0; y < h; ++y) {
    const double* r0 = p + static_cast<std::size_t>(y) * pw;
    const double* r1 = r0 + pw;
    const double* r2 = r1 + pw;
    double* o = out + static_cast<std::size_t>(y) * w;
    int x = 0;
    for (; x + 4 <= w; x += 4) {
      __m256d acc = _mm256_loadu_pd(o + x);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(r0 + x), kv[0], acc);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(r0 + x + 1), kv[1], acc);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(r0 + x + 2), kv[2], acc);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(r1 + x), kv[3], acc);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(r1 + x + 1), kv[4], acc);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(r1 + x + 2), kv[5], acc);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(r2 + x), kv[6], acc);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(r2 + x + 1), kv[7], acc);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(r2 + x + 2), kv[8], acc);
      _mm256_storeu_pd(o + x, acc);
    }
    for (; x < w; ++x) {
      double acc = 0.0;
      for (int t = 0; t < 9; ++t) acc += p[(y + t / 3) * pw + x + t % 3] * k9[t];
      o[x] += acc;
    }
  }
}

void conv3x3_wgrad_acc_avx2(const double* in, int h, int w, const double* dout, double* dw9) {
  const double* p = padded(in, h, w);
  const int pw = w + 2;
  __m256d acc[9];
  for (int t = 0; t < 9; ++t) acc[t] = _mm256_setzero_pd();
  double tail[9] = {0};
  for (int y = 0; y < h; ++y) {
    const double* r0 = p + static_cast<std::size_t>(y) * pw;
    const double* r1 = r0 + pw;
    const double* r2 = r1 + pw;
    const double* d = dout + static_cast<std::size_t>(y) * w;
    int x = 0;
    for (; x + 4 <= w; x += 4) {
      const __m256d dv = _mm256_loadu_pd(d + x);
      acc[0] = _mm256_fmadd_pd(_mm256_loadu_pd(r0 + x), dv, acc[0]);
      acc[1] = _mm256_fmadd_pd(_mm256_loadu_pd(r0 + x + 1), dv, acc[1]);
      acc[2] = _mm256_fmadd_pd(_mm256_loadu_pd(r0 + x + 2), dv, acc[2]);
      acc[3] = _mm256_fmadd_pd(_mm256_loadu_pd(r1 + x), dv, acc[3]);
      acc[4] = _mm256_fmadd_pd(_mm256_loadu_pd(r1 + x + 1), dv, acc[4]);
      acc[5] = _mm256_fmadd_pd(_mm256_loadu_pd(r1 + x + 2), dv, acc[5]);
      acc[6] = _mm256_fmadd_pd(_mm256_loadu_pd(r2 + x), dv, acc[6]);
      acc[7] = _mm256_fmadd_pd(_mm256_loadu_pd(r2 + x + 1), dv, acc[7]);
      acc[8] = _mm256_fmadd_pd(_mm256_loadu_pd(r2 + x + 2), dv, acc[8]);
    }
    for (; x < w; ++x)
      for (int t = 0; t < 9; ++t) tail[t] += p[(y + t / 3) * pw + x + t % 3] * d[x];
  }
  for (int t = 0; t < 9; ++t) dw9[t] += hsum(acc[t]) + tail[t];
}

double l2sq_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double total = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    total += d * d;
  }
  return total;
}

}  // namespace pipescan::kernels::detail

#endif  // PIPESCAN_AVX2_TU
