#include "nptad/kernels.hpp"

#include <cmath>

namespace nptad::kernels {
namespace {

void add_impl(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_impl(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_impl(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_impl(double c, const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = c * x[i];
}

void axpy_impl(double c, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::fma(c, x[i], y[i]);
}

double dot_impl(const double* a, const double* b, std::size_t n) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) s[i & 3] = std::fma(a[i], b[i], s[i & 3]);
  return (s[0] + s[2]) + (s[1] + s[3]);
}

double sum_impl(const double* x, std::size_t n) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) s[i & 3] += x[i];
  return (s[0] + s[2]) + (s[1] + s[3]);
}

double sq_l2_impl(const double* a, const double* b, std::size_t n) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s[i & 3] = std::fma(d, d, s[i & 3]);
  }
  return (s[0] + s[2]) + (s[1] + s[3]);
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops = {"scalar", add_impl,  sub_impl, mul_impl,  scale_impl,
                          axpy_impl, dot_impl, sum_impl, sq_l2_impl};
  return ops;
}

}  // namespace nptad::kernels
