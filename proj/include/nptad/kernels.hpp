#pragma once

#include <cstddef>

// Low-level dense kernels. Two implementations share one numeric contract:
//
//   * every reduction (dot, sum, sq_l2) runs four independent accumulators,
//     element i goes into s[i % 4] via fused multiply-add, and the final
//     combine is (s0 + s2) + (s1 + s3);
//   * elementwise kernels (add, sub, mul, scale, axpy) have one rounding
//     per output element, axpy via fused multiply-add.
//
// The AVX2 variant maps lane j of the vector accumulator to s[j], so scalar
// and vector results are bit-identical, not merely close.  Pick an
// implementation explicitly or let `active()` choose the fastest supported
// one (override with NPTAD_KERNEL=scalar|avx2).
namespace nptad::kernels {

struct Ops {
  const char* name;
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  void (*scale)(double c, const double* x, double* out, std::size_t n);
  // y[i] += c * x[i]
  void (*axpy)(double c, const double* x, double* y, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  // sum of squared differences
  double (*sq_l2)(const double* a, const double* b, std::size_t n);
};

const Ops& scalar_ops();
// Null when this build/CPU cannot run AVX2+FMA.
const Ops* avx2_ops();
// Dispatched once per process; honors NPTAD_KERNEL.
const Ops& active();

inline void add(const double* a, const double* b, double* out, std::size_t n) { active().add(a, b, out, n); }
inline void sub(const double* a, const double* b, double* out, std::size_t n) { active().sub(a, b, out, n); }
inline void mul(const double* a, const double* b, double* out, std::size_t n) { active().mul(a, b, out, n); }
inline void scale(double c, const double* x, double* out, std::size_t n) { active().scale(c, x, out, n); }
inline void axpy(double c, const double* x, double* y, std::size_t n) { active().axpy(c, x, y, n); }
inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline double sum(const double* x, std::size_t n) { return active().sum(x, n); }
inline double sq_l2(const double* a, const double* b, std::size_t n) { return active().sq_l2(a, b, n); }

// Row-major matrix products built on the dispatched primitives.  _nn:
// c[n x m] = a[n x k] * b[k x m];  _nt: b is given transposed as bt[m x k];
// _tn: a is given transposed as at[k x n].  Plain versions overwrite c, the
// _acc versions accumulate into it (used for gradient accumulation).
void matmul_nn(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m);
void matmul_nt(const double* a, const double* bt, double* c, std::size_t n, std::size_t k, std::size_t m);
void matmul_tn(const double* at, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m);
void matmul_nn_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m);
void matmul_nt_acc(const double* a, const double* bt, double* c, std::size_t n, std::size_t k, std::size_t m);
void matmul_tn_acc(const double* at, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m);

}  // namespace nptad::kernels
