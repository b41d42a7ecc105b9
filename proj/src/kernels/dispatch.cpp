#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "d2stoch/kernels.hpp"

namespace d2stoch::kernels {
namespace {

Backend pick_from_env() {
  const char* env = std::getenv("D2STOCH_SIMD");
  std::string want = env ? env : "auto";
  if (want == "scalar") return Backend::Scalar;
  if (want == "avx2") {
    if (!cpu_has_avx2()) throw std::runtime_error("D2STOCH_SIMD=avx2 but CPU lacks avx2/fma");
    return Backend::Avx2;
  }
  return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<int>& slot() {
  static std::atomic<int> s{static_cast<int>(pick_from_env())};
  return s;
}

}  // namespace

Backend active_backend() { return static_cast<Backend>(slot().load()); }

const KernelTable& active() {
  return active_backend() == Backend::Avx2 ? avx2_table() : scalar_table();
}

std::string backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

void force_backend(Backend b) {
  if (b == Backend::Avx2 && !cpu_has_avx2())
    throw std::runtime_error("avx2 backend unavailable on this CPU");
  slot().store(static_cast<int>(b));
}

}  // namespace d2stoch::kernels
