#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace d2stoch::kernels {

// Read-only view of a real CSR matrix.
struct CsrView {
  std::size_t rows = 0;
  const std::int64_t* rowptr = nullptr;
  const std::int32_t* col = nullptr;
  const double* val = nullptr;
};

enum class Backend { Scalar, Avx2 };

struct KernelTable {
  void (*spmv)(const CsrView&, const double* x, double* y);
  void (*axpy)(std::size_t n, double a, const double* x, double* y);
  double (*dot)(std::size_t n, const double* x, const double* y);
  double (*sum)(std::size_t n, const double* x);
  // y = x + a*z, written into y; saves one pass in the integrator.
  void (*xpaz)(std::size_t n, const double* x, double a, const double* z, double* y);
};

const KernelTable& scalar_table();
const KernelTable& avx2_table();

bool cpu_has_avx2();

// Active table. Chosen once: D2STOCH_SIMD=scalar|avx2|auto, default auto.
const KernelTable& active();
Backend active_backend();
std::string backend_name(Backend b);

// Force a backend for the rest of the process. Throws if avx2 is
// requested on a CPU without it.
void force_backend(Backend b);

}  // namespace d2stoch::kernels
