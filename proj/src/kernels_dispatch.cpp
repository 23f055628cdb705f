#include "nptad/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

namespace nptad::kernels {

namespace {

const Ops& pick() {
  const char* want = std::getenv("NPTAD_KERNEL");
  if (want != nullptr && std::strlen(want) > 0) {
    if (std::strcmp(want, "scalar") == 0) return scalar_ops();
    if (std::strcmp(want, "avx2") == 0) {
      const Ops* ops = avx2_ops();
      if (ops == nullptr)
        throw std::runtime_error("NPTAD_KERNEL=avx2 requested but AVX2+FMA is unavailable");
      return *ops;
    }
    if (std::strcmp(want, "auto") != 0)
      throw std::runtime_error("NPTAD_KERNEL must be scalar, avx2 or auto (got '" +
                               std::string(want) + "')");
  }
  const Ops* ops = avx2_ops();
  return ops != nullptr ? *ops : scalar_ops();
}

}  // namespace

const Ops& active() {
  static const Ops& ops = pick();
  return ops;
}

void matmul_nn_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
                   std::size_t m) {
  const Ops& ops = active();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * m;
    for (std::size_t p = 0; p < k; ++p) ops.axpy(arow[p], b + p * m, crow, m);
  }
}

void matmul_nt_acc(const double* a, const double* bt, double* c, std::size_t n, std::size_t k,
                   std::size_t m) {
  const Ops& ops = active();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * m;
    for (std::size_t j = 0; j < m; ++j) crow[j] += ops.dot(arow, bt + j * k, k);
  }
}

void matmul_tn_acc(const double* at, const double* b, double* c, std::size_t n, std::size_t k,
                   std::size_t m) {
  const Ops& ops = active();
  // c[i][j] += sum_p at[p][i] * b[p][j]; accumulate row p of b into row i of c.
  for (std::size_t p = 0; p < k; ++p) {
    const double* atrow = at + p * n;
    const double* brow = b + p * m;
    for (std::size_t i = 0; i < n; ++i) ops.axpy(atrow[i], brow, c + i * m, m);
  }
}

void matmul_nn(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m) {
  for (std::size_t i = 0; i < n * m; ++i) c[i] = 0.0;
  matmul_nn_acc(a, b, c, n, k, m);
}

void matmul_nt(const double* a, const double* bt, double* c, std::size_t n, std::size_t k,
               std::size_t m) {
  const Ops& ops = active();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * m;
    for (std::size_t j = 0; j < m; ++j) crow[j] = ops.dot(arow, bt + j * k, k);
  }
}

void matmul_tn(const double* at, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m) {
  for (std::size_t i = 0; i < n * m; ++i) c[i] = 0.0;
  matmul_tn_acc(at, b, c, n, k, m);
}

}  // namespace nptad::kernels
