#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "d2stoch/kernels.hpp"

namespace d2stoch {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct EigCapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConvergenceFailure : std::runtime_error {
  double residual;
  ConvergenceFailure(const std::string& what, double r) : std::runtime_error(what), residual(r) {}
};

// Row-major entries; throws NonFiniteError on NaN/Inf.
CMatrix make_cmatrix(int rows, int cols, const std::vector<cplx>& entries);
void require_finite(const CMatrix& A, const char* what);
double max_abs(const CMatrix& A);

// Basis index <-> digit string, site 1 slowest.
struct SiteIndexing {
  int N = 1;
  int localDim = 2;
  std::size_t dim() const;
  std::size_t encode(const std::vector<int>& digits) const;
  std::vector<int> decode(std::size_t index) const;
};

CMatrix kron(const CMatrix& A, const CMatrix& B);
CMatrix kron_all(const std::vector<CMatrix>& factors);
CMatrix identity(int n);

// Acts as op on the listed legs (op's slowest index = legs[0]); identity
// elsewhere. dims[0] is the slowest leg of the full space.
CMatrix embed(const CMatrix& op, const std::vector<int>& legs, const std::vector<int>& dims);
std::vector<Eigen::Triplet<cplx>> embed_triplets(const CMatrix& op, const std::vector<int>& legs,
                                                 const std::vector<int>& dims);

// Two-site operator on (k, k+1 mod N), k is 1-based; k = N acts on (N, 1)
// with op's first leg on site N.
CMatrix embed_pair(const CMatrix& op, int k, int N, int localDim);
CMatrix embed_single(const CMatrix& op, int k, int N, int localDim);

// perm[siteIndex] = laneIndex, laneIndex = sigmaString * 2^N + tauString.
std::vector<std::size_t> interleave_map(int N);
CMatrix interleave_permutation(int N);

// S |j1 j2 ... jN> = |jN j1 ... j_{N-1}>, so S embed_pair(A,k) S^T = embed_pair(A,k+1).
CMatrix cyclic_shift(int N, int localDim);

// Sum of the diagonal aux blocks; aux is the slowest leg of X.
CMatrix partial_trace_aux(const CMatrix& X, int auxDim);
// Block (a, b) of X viewed as an auxDim x auxDim matrix of operators.
CMatrix aux_block(const CMatrix& X, int auxDim, int a, int b);

struct EigResult {
  CVector values;
  CMatrix vectors;
  double maxResidual = 0.0;  // max ||A v - lambda v|| / ||A||, ||v|| = 1
};
EigResult eig(const CMatrix& A, std::size_t cap = 4096);
CVector eigenvalues(const CMatrix& A, std::size_t cap = 4096);

// Orthonormal basis of the right kernel (columns).
CMatrix null_space(const CMatrix& A, double tol = 1e-10);

struct CsrMatrix {
  std::size_t n = 0;
  std::vector<std::int64_t> rowptr{0};
  std::vector<std::int32_t> col;
  std::vector<double> val;

  static CsrMatrix from_triplets(std::size_t n, std::vector<Eigen::Triplet<double>> trips);
  static CsrMatrix from_dense(const RMatrix& A);
  kernels::CsrView view() const;
  RMatrix dense() const;
  std::size_t nnz() const { return val.size(); }
  double norm1() const;  // max column abs sum
};

struct ExpmStats {
  int accepted = 0;
  int rejected = 0;
};

// exp(A t) v by adaptive RK4 with step doubling; per-step error <= tol * ||y||_inf.
RVector expm_action(const CsrMatrix& A, const RVector& v, double t, double tol = 1e-10,
                    ExpmStats* stats = nullptr);
CVector expm_action(const CMatrix& A, const CVector& v, double t, double tol = 1e-10,
                    ExpmStats* stats = nullptr);

using MatrixFn = std::function<CMatrix(cplx)>;
// Central difference with one Richardson step, error O(h^4).
CMatrix num_derivative(const MatrixFn& f, cplx u0, double h = 1e-4);

}  // namespace d2stoch
