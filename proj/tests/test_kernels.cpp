#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include "d2stoch/kernels.hpp"
#include "d2stoch/lintensor.hpp"

using namespace d2stoch;

namespace {

// Random sparse matrix with ragged rows, so SIMD tails are exercised.
CsrMatrix random_csr(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_int_distribution<int> len(0, 13);
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t r = 0; r < n; ++r) {
    const int k = len(rng);
    for (int i = 0; i < k; ++i) t.emplace_back(static_cast<int>(r), static_cast<int>(rng() % n), U(rng));
  }
  return CsrMatrix::from_triplets(n, t);
}

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = U(rng);
  return v;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("active backend honours D2STOCH_SIMD") {
    const char* env = std::getenv("D2STOCH_SIMD");
    if (env && std::string(env) == "scalar") CHECK(kernels::active_backend() == kernels::Backend::Scalar);
    if (!kernels::cpu_has_avx2()) CHECK(kernels::active_backend() == kernels::Backend::Scalar);
    MESSAGE("backend: " << kernels::backend_name(kernels::active_backend()));
  }

  TEST_CASE("scalar and avx2 tables agree") {
    if (!kernels::cpu_has_avx2()) return;
    const auto& S = kernels::scalar_table();
    const auto& A = kernels::avx2_table();
    for (std::size_t n : {1u, 3u, 4u, 7u, 17u, 64u, 257u}) {
      const CsrMatrix M = random_csr(n, 11 + n);
      const auto x = random_vec(n, 3 + n), z = random_vec(n, 5 + n);
      std::vector<double> ys(n), ya(n);
      S.spmv(M.view(), x.data(), ys.data());
      A.spmv(M.view(), x.data(), ya.data());
      for (std::size_t i = 0; i < n; ++i) CHECK(ya[i] == doctest::Approx(ys[i]).epsilon(1e-14));

      CHECK(A.dot(n, x.data(), z.data()) == doctest::Approx(S.dot(n, x.data(), z.data())).epsilon(1e-13));
      CHECK(A.sum(n, x.data()) == doctest::Approx(S.sum(n, x.data())).epsilon(1e-13));

      std::vector<double> as = z, aa = z;
      S.axpy(n, 0.37, x.data(), as.data());
      A.axpy(n, 0.37, x.data(), aa.data());
      for (std::size_t i = 0; i < n; ++i) CHECK(aa[i] == doctest::Approx(as[i]).epsilon(1e-15));

      S.xpaz(n, x.data(), -1.25, z.data(), ys.data());
      A.xpaz(n, x.data(), -1.25, z.data(), ya.data());
      for (std::size_t i = 0; i < n; ++i) CHECK(ya[i] == doctest::Approx(ys[i]).epsilon(1e-15));
    }
  }

  TEST_CASE("spmv matches dense product") {
    const CsrMatrix M = random_csr(40, 99);
    const auto x = random_vec(40, 7);
    std::vector<double> y(40);
    kernels::active().spmv(M.view(), x.data(), y.data());
    const RVector ref = M.dense() * Eigen::Map<const RVector>(x.data(), 40);
    for (int i = 0; i < 40; ++i) CHECK(y[static_cast<std::size_t>(i)] == doctest::Approx(ref(i)).epsilon(1e-13));
  }
}
