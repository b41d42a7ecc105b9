#include "d2stoch/lintensor.hpp"

#include <algorithm>
#include <cmath>

namespace d2stoch {

CMatrix make_cmatrix(int rows, int cols, const std::vector<cplx>& entries) {
  if (rows <= 0 || cols <= 0) throw DimensionError("make_cmatrix: non-positive dimension");
  if (entries.size() != static_cast<std::size_t>(rows) * cols)
    throw DimensionError("make_cmatrix: entries size != rows*cols");
  CMatrix A(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) A(r, c) = entries[static_cast<std::size_t>(r) * cols + c];
  require_finite(A, "make_cmatrix");
  return A;
}

void require_finite(const CMatrix& A, const char* what) {
  for (Eigen::Index i = 0; i < A.size(); ++i) {
    const cplx z = A.data()[i];
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw NonFiniteError(std::string(what) + ": non-finite entry");
  }
}

double max_abs(const CMatrix& A) { return A.size() ? A.cwiseAbs().maxCoeff() : 0.0; }

std::size_t SiteIndexing::dim() const {
  std::size_t d = 1;
  for (int i = 0; i < N; ++i) d *= static_cast<std::size_t>(localDim);
  return d;
}

std::size_t SiteIndexing::encode(const std::vector<int>& digits) const {
  if (static_cast<int>(digits.size()) != N) throw DimensionError("encode: wrong digit count");
  std::size_t idx = 0;
  for (int d : digits) {
    if (d < 0 || d >= localDim) throw DimensionError("encode: digit out of range");
    idx = idx * localDim + d;
  }
  return idx;
}

std::vector<int> SiteIndexing::decode(std::size_t index) const {
  if (index >= dim()) throw DimensionError("decode: index out of range");
  std::vector<int> digits(N);
  for (int i = N - 1; i >= 0; --i) {
    digits[i] = static_cast<int>(index % localDim);
    index /= localDim;
  }
  return digits;
}

CMatrix kron(const CMatrix& A, const CMatrix& B) {
  CMatrix K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

CMatrix kron_all(const std::vector<CMatrix>& factors) {
  if (factors.empty()) return CMatrix::Identity(1, 1);
  CMatrix K = factors.front();
  for (std::size_t i = 1; i < factors.size(); ++i) K = kron(K, factors[i]);
  return K;
}

CMatrix identity(int n) { return CMatrix::Identity(n, n); }

namespace {

struct LegLayout {
  std::vector<std::size_t> stride;  // stride of each leg in the full index
  std::size_t total = 1;
};

LegLayout layout(const std::vector<int>& dims) {
  LegLayout L;
  L.stride.assign(dims.size(), 1);
  for (int i = static_cast<int>(dims.size()) - 1; i >= 0; --i) {
    L.stride[i] = L.total;
    L.total *= static_cast<std::size_t>(dims[i]);
  }
  return L;
}

void check_legs(const CMatrix& op, const std::vector<int>& legs, const std::vector<int>& dims) {
  std::size_t sub = 1;
  for (std::size_t a = 0; a < legs.size(); ++a) {
    if (legs[a] < 0 || legs[a] >= static_cast<int>(dims.size()))
      throw DimensionError("embed: leg out of range");
    for (std::size_t b = 0; b < a; ++b)
      if (legs[a] == legs[b]) throw DimensionError("embed: repeated leg");
    sub *= static_cast<std::size_t>(dims[legs[a]]);
  }
  if (static_cast<std::size_t>(op.rows()) != sub || static_cast<std::size_t>(op.cols()) != sub)
    throw DimensionError("embed: operator dimension does not match legs");
}

template <class Sink>
void embed_visit(const CMatrix& op, const std::vector<int>& legs, const std::vector<int>& dims,
                 Sink&& sink) {
  check_legs(op, legs, dims);
  const LegLayout L = layout(dims);
  const std::size_t sub = static_cast<std::size_t>(op.rows());
  // offset[s] = contribution of sub-index s to the full index
  std::vector<std::size_t> offset(sub, 0);
  for (std::size_t s = 0; s < sub; ++s) {
    std::size_t rem = s, off = 0;
    for (int a = static_cast<int>(legs.size()) - 1; a >= 0; --a) {
      const std::size_t d = static_cast<std::size_t>(dims[legs[a]]);
      off += (rem % d) * L.stride[legs[a]];
      rem /= d;
    }
    offset[s] = off;
  }
  // enumerate the complement ("spectator") indices
  std::vector<int> spect;
  for (int i = 0; i < static_cast<int>(dims.size()); ++i)
    if (std::find(legs.begin(), legs.end(), i) == legs.end()) spect.push_back(i);
  std::size_t nspect = 1;
  for (int i : spect) nspect *= static_cast<std::size_t>(dims[i]);

  std::vector<std::pair<std::size_t, std::size_t>> nz;
  for (std::size_t r = 0; r < sub; ++r)
    for (std::size_t c = 0; c < sub; ++c)
      if (op(r, c) != cplx(0.0)) nz.emplace_back(r, c);

  for (std::size_t e = 0; e < nspect; ++e) {
    std::size_t rem = e, base = 0;
    for (int a = static_cast<int>(spect.size()) - 1; a >= 0; --a) {
      const std::size_t d = static_cast<std::size_t>(dims[spect[a]]);
      base += (rem % d) * L.stride[spect[a]];
      rem /= d;
    }
    for (auto [r, c] : nz) sink(base + offset[r], base + offset[c], op(r, c));
  }
}

}  // namespace

CMatrix embed(const CMatrix& op, const std::vector<int>& legs, const std::vector<int>& dims) {
  const std::size_t D = layout(dims).total;
  CMatrix out = CMatrix::Zero(D, D);
  embed_visit(op, legs, dims, [&](std::size_t r, std::size_t c, cplx v) { out(r, c) += v; });
  return out;
}

std::vector<Eigen::Triplet<cplx>> embed_triplets(const CMatrix& op, const std::vector<int>& legs,
                                                 const std::vector<int>& dims) {
  std::vector<Eigen::Triplet<cplx>> t;
  embed_visit(op, legs, dims, [&](std::size_t r, std::size_t c, cplx v) {
    t.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
  });
  return t;
}

CMatrix embed_pair(const CMatrix& op, int k, int N, int localDim) {
  if (k < 1 || k > N) throw DimensionError("embed_pair: site out of range");
  if (N < 2) throw DimensionError("embed_pair: need N >= 2");
  std::vector<int> dims(N, localDim);
  return embed(op, {k - 1, k % N}, dims);
}

CMatrix embed_single(const CMatrix& op, int k, int N, int localDim) {
  if (k < 1 || k > N) throw DimensionError("embed_single: site out of range");
  std::vector<int> dims(N, localDim);
  return embed(op, {k - 1}, dims);
}

std::vector<std::size_t> interleave_map(int N) {
  if (N < 1) throw DimensionError("interleave_map: N < 1");
  const SiteIndexing site{N, 4};
  const std::size_t half = std::size_t{1} << N;
  std::vector<std::size_t> perm(site.dim());
  for (std::size_t i = 0; i < site.dim(); ++i) {
    const auto digits = site.decode(i);
    std::size_t a = 0, b = 0;
    for (int j : digits) {
      a = 2 * a + (j >> 1);
      b = 2 * b + (j & 1);
    }
    perm[i] = a * half + b;
  }
  return perm;
}

CMatrix interleave_permutation(int N) {
  const auto perm = interleave_map(N);
  CMatrix P = CMatrix::Zero(perm.size(), perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) P(perm[i], i) = 1.0;
  return P;
}

CMatrix cyclic_shift(int N, int localDim) {
  const SiteIndexing s{N, localDim};
  CMatrix S = CMatrix::Zero(s.dim(), s.dim());
  for (std::size_t i = 0; i < s.dim(); ++i) {
    auto d = s.decode(i);
    std::rotate(d.rbegin(), d.rbegin() + 1, d.rend());
    S(s.encode(d), i) = 1.0;
  }
  return S;
}

CMatrix partial_trace_aux(const CMatrix& X, int auxDim) {
  const Eigen::Index D = X.rows() / auxDim;
  CMatrix out = CMatrix::Zero(D, D);
  for (int a = 0; a < auxDim; ++a) out += X.block(a * D, a * D, D, D);
  return out;
}

CMatrix aux_block(const CMatrix& X, int auxDim, int a, int b) {
  const Eigen::Index D = X.rows() / auxDim;
  return X.block(a * D, b * D, D, D);
}

EigResult eig(const CMatrix& A, std::size_t cap) {
  if (A.rows() != A.cols()) throw DimensionError("eig: matrix not square");
  if (static_cast<std::size_t>(A.rows()) > cap) throw EigCapExceeded("eig: dimension exceeds cap");
  require_finite(A, "eig");
  Eigen::ComplexEigenSolver<CMatrix> solver(A, true);
  if (solver.info() != Eigen::Success) throw ConvergenceFailure("eig: solver did not converge", -1);
  EigResult r;
  r.values = solver.eigenvalues();
  r.vectors = solver.eigenvectors();
  const double scale = std::max(A.norm(), 1e-300);
  for (Eigen::Index k = 0; k < r.values.size(); ++k) {
    CVector v = r.vectors.col(k);
    const double nv = v.norm();
    if (nv > 0) v /= nv;
    r.vectors.col(k) = v;
    const double res = (A * v - r.values(k) * v).norm() / scale;
    r.maxResidual = std::max(r.maxResidual, res);
  }
  if (r.maxResidual > 1e-9) throw ConvergenceFailure("eig: residual above 1e-9", r.maxResidual);
  return r;
}

CVector eigenvalues(const CMatrix& A, std::size_t cap) {
  if (A.rows() != A.cols()) throw DimensionError("eigenvalues: matrix not square");
  if (static_cast<std::size_t>(A.rows()) > cap)
    throw EigCapExceeded("eigenvalues: dimension exceeds cap");
  require_finite(A, "eigenvalues");
  Eigen::ComplexEigenSolver<CMatrix> solver(A, false);
  if (solver.info() != Eigen::Success) throw ConvergenceFailure("eigenvalues: no convergence", -1);
  return solver.eigenvalues();
}

CMatrix null_space(const CMatrix& A, double tol) {
  if (A.rows() != A.cols()) throw DimensionError("null_space: matrix not square");
  require_finite(A, "null_space");
  // JacobiSVD: complex BDCSVD returned a non-orthonormal V on rank-deficient generators
  Eigen::JacobiSVD<CMatrix> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  const double cut = tol * std::max(smax, 1e-300);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < A.cols(); ++i) {
    const double s = i < sv.size() ? sv(i) : 0.0;
    if (s <= cut) keep.push_back(i);
  }
  CMatrix K(A.cols(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) K.col(j) = svd.matrixV().col(keep[j]);
  return K;
}

CsrMatrix CsrMatrix::from_triplets(std::size_t n, std::vector<Eigen::Triplet<double>> trips) {
  std::sort(trips.begin(), trips.end(), [](const auto& x, const auto& y) {
    return x.row() != y.row() ? x.row() < y.row() : x.col() < y.col();
  });
  CsrMatrix M;
  M.n = n;
  M.rowptr.assign(n + 1, 0);
  for (std::size_t i = 0; i < trips.size();) {
    const auto r = trips[i].row(), c = trips[i].col();
    if (r < 0 || c < 0 || static_cast<std::size_t>(r) >= n || static_cast<std::size_t>(c) >= n)
      throw DimensionError("CsrMatrix: triplet out of range");
    double v = 0.0;
    while (i < trips.size() && trips[i].row() == r && trips[i].col() == c) v += trips[i++].value();
    if (v != 0.0) {
      M.col.push_back(static_cast<std::int32_t>(c));
      M.val.push_back(v);
      M.rowptr[r + 1]++;
    }
  }
  for (std::size_t r = 0; r < n; ++r) M.rowptr[r + 1] += M.rowptr[r];
  return M;
}

CsrMatrix CsrMatrix::from_dense(const RMatrix& A) {
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index r = 0; r < A.rows(); ++r)
    for (Eigen::Index c = 0; c < A.cols(); ++c)
      if (A(r, c) != 0.0) t.emplace_back(r, c, A(r, c));
  return from_triplets(static_cast<std::size_t>(A.rows()), std::move(t));
}

kernels::CsrView CsrMatrix::view() const {
  return kernels::CsrView{n, rowptr.data(), col.data(), val.data()};
}

RMatrix CsrMatrix::dense() const {
  RMatrix A = RMatrix::Zero(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::int64_t p = rowptr[r]; p < rowptr[r + 1]; ++p) A(r, col[p]) += val[p];
  return A;
}

double CsrMatrix::norm1() const {
  std::vector<double> cs(n, 0.0);
  for (std::size_t p = 0; p < val.size(); ++p) cs[col[p]] += std::abs(val[p]);
  return cs.empty() ? 0.0 : *std::max_element(cs.begin(), cs.end());
}

namespace {

// Generic adaptive RK4 driver; Ops supplies apply/axpy/norm on vector type V.
template <class V, class Ops>
V rk4_expm(const Ops& ops, double norm1, const V& v, double t, double tol, ExpmStats* stats) {
  if (t < 0) throw std::invalid_argument("expm_action: negative time");
  if (!(tol > 0)) throw std::invalid_argument("expm_action: tol must be positive");
  if (!ops.finite(v)) throw NonFiniteError("expm_action: non-finite vector");
  V y = v;
  if (t == 0.0 || norm1 == 0.0) return y;
  const std::size_t n = static_cast<std::size_t>(v.size());
  V k1(n), k2(n), k3(n), k4(n), tmp(n), full(n), half(n);

  auto step = [&](const V& y0, double h, V& out) {
    ops.apply(y0, k1);
    ops.xpaz(y0, 0.5 * h, k1, tmp);
    ops.apply(tmp, k2);
    ops.xpaz(y0, 0.5 * h, k2, tmp);
    ops.apply(tmp, k3);
    ops.xpaz(y0, h, k3, tmp);
    ops.apply(tmp, k4);
    out = y0;
    ops.axpy(h / 6.0, k1, out);
    ops.axpy(h / 3.0, k2, out);
    ops.axpy(h / 3.0, k3, out);
    ops.axpy(h / 6.0, k4, out);
  };

  double h = std::min(t, 0.5 / norm1);
  double done = 0.0;
  int accepted = 0, rejected = 0;
  V mid(n);
  while (done < t) {
    h = std::min(h, t - done);
    step(y, h, full);
    step(y, 0.5 * h, mid);
    step(mid, 0.5 * h, half);
    const double scale = std::max(ops.norm_inf(y), 1e-300);
    const double err = ops.diff_inf(half, full) / 15.0;
    if (err <= tol * scale || h < 1e-14 * std::max(1.0, t)) {
      // local extrapolation: half + (half - full) / 15
      y = half;
      ops.axpy(1.0 / 15.0, half, y);
      ops.axpy(-1.0 / 15.0, full, y);
      done += h;
      ++accepted;
    } else {
      ++rejected;
    }
    const double fac = err > 0 ? 0.9 * std::pow(tol * scale / err, 0.2) : 2.0;
    h *= std::clamp(fac, 0.2, 2.0);
  }
  if (!ops.finite(y)) throw NonFiniteError("expm_action: non-finite result");
  if (stats) {
    stats->accepted = accepted;
    stats->rejected = rejected;
  }
  return y;
}

struct CsrOps {
  const CsrMatrix& A;
  const kernels::KernelTable& k = kernels::active();
  void apply(const RVector& x, RVector& y) const { k.spmv(A.view(), x.data(), y.data()); }
  void axpy(double a, const RVector& x, RVector& y) const {
    k.axpy(static_cast<std::size_t>(x.size()), a, x.data(), y.data());
  }
  void xpaz(const RVector& x, double a, const RVector& z, RVector& y) const {
    k.xpaz(static_cast<std::size_t>(x.size()), x.data(), a, z.data(), y.data());
  }
  double norm_inf(const RVector& x) const { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; }
  double diff_inf(const RVector& x, const RVector& y) const {
    return x.size() ? (x - y).cwiseAbs().maxCoeff() : 0.0;
  }
  bool finite(const RVector& x) const { return x.allFinite(); }
};

struct DenseOps {
  const CMatrix& A;
  void apply(const CVector& x, CVector& y) const { y.noalias() = A * x; }
  void axpy(double a, const CVector& x, CVector& y) const { y += a * x; }
  void xpaz(const CVector& x, double a, const CVector& z, CVector& y) const { y = x + a * z; }
  double norm_inf(const CVector& x) const { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; }
  double diff_inf(const CVector& x, const CVector& y) const {
    return x.size() ? (x - y).cwiseAbs().maxCoeff() : 0.0;
  }
  bool finite(const CVector& x) const { return x.allFinite(); }
};

}  // namespace

RVector expm_action(const CsrMatrix& A, const RVector& v, double t, double tol, ExpmStats* stats) {
  if (static_cast<std::size_t>(v.size()) != A.n) throw DimensionError("expm_action: size mismatch");
  CsrOps ops{A};
  return rk4_expm(ops, A.norm1(), v, t, tol, stats);
}

CVector expm_action(const CMatrix& A, const CVector& v, double t, double tol, ExpmStats* stats) {
  if (A.rows() != A.cols() || A.rows() != v.size())
    throw DimensionError("expm_action: size mismatch");
  require_finite(A, "expm_action");
  DenseOps ops{A};
  const double n1 = A.size() ? A.cwiseAbs().colwise().sum().maxCoeff() : 0.0;
  return rk4_expm(ops, n1, v, t, tol, stats);
}

CMatrix num_derivative(const MatrixFn& f, cplx u0, double h) {
  if (!(h > 0)) throw std::invalid_argument("num_derivative: h must be positive");
  const CMatrix fp1 = f(u0 + h), fm1 = f(u0 - h);
  const CMatrix fp2 = f(u0 + 2 * h), fm2 = f(u0 - 2 * h);
  CMatrix d = (8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * h);
  require_finite(d, "num_derivative");
  return d;
}

}  // namespace d2stoch
