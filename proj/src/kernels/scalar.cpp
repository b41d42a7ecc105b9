#include "d2stoch/kernels.hpp"

namespace d2stoch::kernels {
namespace {

void spmv(const CsrView& A, const double* x, double* y) {
  for (std::size_t r = 0; r < A.rows; ++r) {
    double acc = 0.0;
    for (std::int64_t p = A.rowptr[r]; p < A.rowptr[r + 1]; ++p)
      acc += A.val[p] * x[A.col[p]];
    y[r] = acc;
  }
}

void axpy(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot(std::size_t n, const double* x, const double* y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum(std::size_t n, const double* x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

void xpaz(std::size_t n, const double* x, double a, const double* z, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + a * z[i];
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{spmv, axpy, dot, sum, xpaz};
  return t;
}

}  // namespace d2stoch::kernels
