// Compiled with -mavx2 -mfma on x86-64 (see CMakeLists); every entry point
// is guarded behind the runtime CPU check in avx2_ops().
#include "nptad/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace nptad::kernels {
namespace {

// (s0 + s2) + (s1 + s3), matching the scalar reference combine order.
inline double hsum(__m256d acc) {
  __m128d lo = _mm256_castpd256_pd128(acc);        // [s0 s1]
  __m128d hi = _mm256_extractf128_pd(acc, 1);      // [s2 s3]
  __m128d pair = _mm_add_pd(lo, hi);               // [s0+s2, s1+s3]
  __m128d swap = _mm_unpackhi_pd(pair, pair);      // [s1+s3, s1+s3]
  return _mm_cvtsd_f64(_mm_add_sd(pair, swap));
}

void add_impl(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_impl(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_impl(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_impl(double c, const double* x, double* out, std::size_t n) {
  const __m256d vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(vc, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = c * x[i];
}

void axpy_impl(double c, const double* x, double* y, std::size_t n) {
  const __m256d vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(vc, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] = std::fma(c, x[i], y[i]);
}

double dot_impl(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  if (i < n) {
    // Tail elements keep accumulating into their i%4 lane.
    alignas(32) double s[4];
    _mm256_store_pd(s, acc);
    for (; i < n; ++i) s[i & 3] = std::fma(a[i], b[i], s[i & 3]);
    acc = _mm256_load_pd(s);
  }
  return hsum(acc);
}

double sum_impl(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  if (i < n) {
    alignas(32) double s[4];
    _mm256_store_pd(s, acc);
    for (; i < n; ++i) s[i & 3] += x[i];
    acc = _mm256_load_pd(s);
  }
  return hsum(acc);
}

double sq_l2_impl(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  if (i < n) {
    alignas(32) double s[4];
    _mm256_store_pd(s, acc);
    for (; i < n; ++i) {
      const double d = a[i] - b[i];
      s[i & 3] = std::fma(d, d, s[i & 3]);
    }
    acc = _mm256_load_pd(s);
  }
  return hsum(acc);
}

}  // namespace

const Ops* avx2_ops() {
  if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) return nullptr;
  static const Ops ops = {"avx2",   add_impl,  sub_impl, mul_impl,  scale_impl,
                          axpy_impl, dot_impl, sum_impl, sq_l2_impl};
  return &ops;
}

}  // namespace nptad::kernels

#else  // non-x86 build or AVX2/FMA not enabled for this TU

namespace nptad::kernels {
const Ops* avx2_ops() { return nullptr; }
}  // namespace nptad::kernels

#endif
