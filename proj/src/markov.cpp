#include "d2stoch/markov.hpp"

#include <cmath>
#include <sstream>

namespace d2stoch {

double GeneratorSpec::q1() const { return std::exp(eta1); }
double GeneratorSpec::q2() const { return std::exp(eta2); }

void GeneratorSpec::validate() const {
  if (N < 1) throw std::invalid_argument("generator: N must be >= 1");
  if (boundary != Boundary::Open && N < 2)
    throw std::invalid_argument("generator: periodic and twisted chains need N >= 2");
  if (symmetry == Symmetry::Asymmetric) {
    if (!std::isfinite(eta1) || !std::isfinite(eta2) || eta1 == 0.0 || eta2 == 0.0)
      throw std::invalid_argument("generator: asymmetric chain needs finite nonzero eta1, eta2");
    if (boundary == Boundary::Twisted)
      throw std::invalid_argument("generator: the asymmetric twisted chain is not stochastic");
  }
}

std::string GeneratorSpec::name() const {
  std::ostringstream os;
  os << (boundary == Boundary::Periodic ? "periodic" : boundary == Boundary::Twisted ? "twisted" : "open")
     << (symmetry == Symmetry::Symmetric ? "-sym" : "-asym");
  if (symmetry == Symmetry::Asymmetric)
    os << (variant == AsymVariant::RawM ? "(M)" : "(Mbar)");
  os << " N=" << N;
  return os.str();
}

StochasticityViolation::StochasticityViolation(const std::string& t, std::size_t r, std::size_t c,
                                               double v)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "stochasticity violation in " << t << ": entry (" << r << "," << c << ") = " << v;
        return os.str();
      }()),
      term(t),
      row(r),
      col(c),
      value(v) {}

namespace {

// Bulk symmetric generator on (k, k+1).
constexpr int kMkk[16][16] = {
    {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
    {0, -1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
    {0, 0, -1, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0},
    {0, 0, 0, -2, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0},
    {0, 1, 0, 0, -1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
    {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
    {0, 0, 0, 1, 0, 0, -2, 0, 0, 0, 0, 0, 1, 0, 0, 0},
    {0, 0, 0, 0, 0, 0, 0, -1, 0, 0, 0, 0, 0, 1, 0, 0},
    {0, 0, 1, 0, 0, 0, 0, 0, -1, 0, 0, 0, 0, 0, 0, 0},
    {0, 0, 0, 1, 0, 0, 0, 0, 0, -2, 0, 0, 1, 0, 0, 0},
    {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
    {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, -1, 0, 0, 1, 0},
    {0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, -2, 0, 0, 0},
    {0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, -1, 0, 0},
    {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, -1, 0},
    {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
};

// Twisted bond on (N, 1).
constexpr int kMt[16][16] = {
    {-2, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0},
    {0, -1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0},
    {0, 0, -1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0},
    {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
    {0, 0, 0, 0, -1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0},
    {1, 0, 0, 0, 0, -2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1},
    {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
    {0, 0, 1, 0, 0, 0, 0, -1, 0, 0, 0, 0, 0, 0, 0, 0},
    {0, 0, 0, 0, 0, 0, 0, 0, -1, 0, 0, 0, 0, 1, 0, 0},
    {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
    {1, 0, 0, 0, 0, 0, 0, 0, 0, 0, -2, 0, 0, 0, 0, 1},
    {0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, -1, 0, 0, 0, 0},
    {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
    {0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, -1, 0, 0},
    {0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, -1, 0},
    {0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, -2},
};

CMatrix from_literal(const int (&m)[16][16]) {
  CMatrix out(16, 16);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) out(r, c) = m[r][c];
  return out;
}

// Off-diagonal placement shared by the coth-rate and q-rate bulk matrices.
// A_i multiplies the moves out of the low lane state, B_i the reverse ones.
enum Rate { A1, A2, B1, B2 };
struct OffDiag {
  int r, c;
  Rate rate;
};
constexpr OffDiag kAsymOff[] = {
    {1, 4, B2},  {2, 8, B1},  {3, 6, B2},   {3, 9, B1},   {4, 1, A2},  {6, 3, A2},
    {6, 12, B1}, {7, 13, B1}, {8, 2, A1},   {9, 3, A1},   {9, 12, B2}, {11, 14, B2},
    {12, 6, A1}, {12, 9, A2}, {13, 7, A1},  {14, 11, A2},
};

CMatrix asym_bulk(const double rates[4]) {
  CMatrix M = CMatrix::Zero(16, 16);
  for (const auto& o : kAsymOff) M(o.r, o.c) = rates[o.rate];
  for (int c = 0; c < 16; ++c) M(c, c) = -M.col(c).sum();
  return M;
}

CMatrix lane_asep(double q) {
  CMatrix L = CMatrix::Zero(4, 4);
  L(1, 1) = -1.0 / q;
  L(1, 2) = q;
  L(2, 1) = 1.0 / q;
  L(2, 2) = -q;
  return L;
}

CMatrix lane_left(double a, double b) {
  CMatrix L(2, 2);
  L << -a, b, a, -b;
  return L;
}

CMatrix lane_right(double ap, double bp) {
  CMatrix L(2, 2);
  L << ap, -bp, -ap, bp;
  return L;
}

CMatrix single_site(const CMatrix& s, const CMatrix& t) {
  return kron(s, identity(2)) + kron(identity(2), t);
}

void check_local(const CMatrix& op, const std::string& term) {
  for (int r = 0; r < op.rows(); ++r)
    for (int c = 0; c < op.cols(); ++c)
      if (r != c && op(r, c).real() < -1e-12)
        throw StochasticityViolation(term, r, c, op(r, c).real());
}

double lane_weight(const GeneratorSpec& spec, Lane l) {
  if (spec.symmetry == Symmetry::Asymmetric && spec.variant == AsymVariant::RawM)
    return 1.0 / std::sinh(spec.eta(l));
  return 1.0;
}

}  // namespace

std::vector<double> printed_rawm_diagonal(double eta1, double eta2) {
  const double a1 = 1.0 / std::tanh(eta1) - 1.0, a2 = 1.0 / std::tanh(eta2) - 1.0;
  const double b1 = a1 + 2.0, b2 = a2 + 2.0;
  return {0, -a2, -a1, -a1 - a2, -b2, 0, -a1 - a2, -a1, -b1, -a1 - a2, 0, -a2, -b1 - b2, -b1, -b2, 0};
}

LocalTerms local_generator(const GeneratorSpec& spec) {
  spec.validate();
  LocalTerms t;
  if (spec.symmetry == Symmetry::Symmetric) {
    t.bulk = from_literal(kMkk);
  } else {
    double r[4];
    if (spec.variant == AsymVariant::RawM) {
      r[A1] = 1.0 / std::tanh(spec.eta1) - 1.0;
      r[A2] = 1.0 / std::tanh(spec.eta2) - 1.0;
      r[B1] = r[A1] + 2.0;
      r[B2] = r[A2] + 2.0;
    } else {
      r[A1] = 1.0 / spec.q1();
      r[A2] = 1.0 / spec.q2();
      r[B1] = spec.q1();
      r[B2] = spec.q2();
    }
    t.bulk = asym_bulk(r);
  }
  if (spec.boundary == Boundary::Periodic) t.wrap = t.bulk;
  if (spec.boundary == Boundary::Twisted) t.wrap = from_literal(kMt);
  if (spec.boundary == Boundary::Open) {
    const auto& b = spec.rates;
    const double ws = lane_weight(spec, Lane::Sigma), wt = lane_weight(spec, Lane::Tau);
    t.left = single_site(ws * lane_left(b.s1, b.s2), wt * lane_left(b.t1, b.t2));
    t.right = single_site(ws * lane_right(b.s1p, b.s2p), wt * lane_right(b.t1p, b.t2p));
  }
  return t;
}

LocalTerms lane_local_generator(const GeneratorSpec& spec, Lane lane) {
  spec.validate();
  LocalTerms t;
  if (spec.symmetry == Symmetry::Symmetric) {
    t.bulk = permutation_matrix(2) - identity(4);
  } else {
    t.bulk = lane_asep(std::exp(spec.eta(lane)));
  }
  if (spec.boundary == Boundary::Periodic) t.wrap = t.bulk;
  if (spec.boundary == Boundary::Twisted) {
    t.wrap = CMatrix::Zero(4, 4);
    t.wrap(0, 0) = t.wrap(3, 3) = -1.0;
    t.wrap(0, 3) = t.wrap(3, 0) = 1.0;
  }
  if (spec.boundary == Boundary::Open) {
    const auto r = spec.rates.lane(lane);
    t.left = lane_left(r[0], r[1]);
    t.right = lane_right(r[2], r[3]);
  }
  return t;
}

namespace {

using RTrip = Eigen::Triplet<double>;

void add_embedded(std::vector<RTrip>& out, const CMatrix& op, const std::vector<int>& legs,
                  const std::vector<int>& dims) {
  for (const auto& t : embed_triplets(op, legs, dims))
    out.emplace_back(t.row(), t.col(), t.value().real());
}

Generator assemble(const LocalTerms& t, int N, int d, bool requireStochastic) {
  if (requireStochastic) {
    check_local(t.bulk, "bulk");
    if (t.wrap.size()) check_local(t.wrap, "wrap");
    if (t.left.size()) check_local(t.left, "left boundary");
    if (t.right.size()) check_local(t.right, "right boundary");
  }
  const std::vector<int> dims(N, d);
  std::vector<RTrip> trips;
  for (int k = 1; k < N; ++k) add_embedded(trips, t.bulk, {k - 1, k}, dims);
  if (t.wrap.size()) add_embedded(trips, t.wrap, {N - 1, 0}, dims);
  if (t.left.size()) add_embedded(trips, t.left, {0}, dims);
  if (t.right.size()) add_embedded(trips, t.right, {N - 1}, dims);
  std::size_t D = 1;
  for (int i = 0; i < N; ++i) D *= static_cast<std::size_t>(d);
  Generator g;
  g.N = N;
  g.localDim = d;
  g.A = CsrMatrix::from_triplets(D, std::move(trips));
  g.report = inspect_generator(g.A);
  if (g.report.maxColumnSum > 1e-12)
    throw std::logic_error("generator assembly produced nonzero column sums");
  if (requireStochastic && g.report.minOffDiagonal < -1e-12) {
    for (std::size_t r = 0; r < g.A.n; ++r)
      for (auto e = g.A.rowptr[r]; e < g.A.rowptr[r + 1]; ++e)
        if (static_cast<std::size_t>(g.A.col[e]) != r && g.A.val[e] < -1e-12)
          throw StochasticityViolation("assembled generator", r, g.A.col[e], g.A.val[e]);
  }
  return g;
}

}  // namespace

GeneratorReport inspect_generator(const CsrMatrix& A) {
  GeneratorReport rep;
  std::vector<double> colsum(A.n, 0.0);
  double minOff = 0.0;
  for (std::size_t r = 0; r < A.n; ++r)
    for (auto e = A.rowptr[r]; e < A.rowptr[r + 1]; ++e) {
      colsum[A.col[e]] += A.val[e];
      if (static_cast<std::size_t>(A.col[e]) != r) minOff = std::min(minOff, A.val[e]);
    }
  for (double s : colsum) rep.maxColumnSum = std::max(rep.maxColumnSum, std::abs(s));
  rep.minOffDiagonal = minOff;
  rep.stochastic = rep.maxColumnSum <= 1e-12 && minOff >= -1e-12;
  return rep;
}

RMatrix Generator::dense(std::size_t cap) const {
  if (A.n > cap) throw EigCapExceeded("generator dimension exceeds dense cap");
  return A.dense();
}

RVector Generator::apply(const RVector& v) const {
  if (static_cast<std::size_t>(v.size()) != A.n) throw DimensionError("generator apply: size");
  RVector y(v.size());
  kernels::active().spmv(A.view(), v.data(), y.data());
  return y;
}

Generator build_generator(const GeneratorSpec& spec) {
  const LocalTerms t = local_generator(spec);
  if (spec.boundary == Boundary::Open && spec.N == 1) {
    LocalTerms single;
    single.bulk = CMatrix::Zero(16, 16);
    single.left = t.left + t.right;
    check_local(t.left, "left boundary");
    check_local(t.right, "right boundary");
    return assemble(single, 1, 4, true);
  }
  return assemble(t, spec.N, 4, true);
}

std::pair<Generator, Generator> lane_generators(const GeneratorSpec& spec) {
  auto one = [&](Lane l) {
    LocalTerms t = lane_local_generator(spec, l);
    if (spec.boundary == Boundary::Open && spec.N == 1) {
      check_local(t.left, "left boundary");
      check_local(t.right, "right boundary");
      t.left += t.right;
      t.right.resize(0, 0);
    }
    return assemble(t, spec.N, 2, true);
  };
  return {one(Lane::Sigma), one(Lane::Tau)};
}

CsrMatrix lane_kronecker_sum(const CsrMatrix& Ms, const CsrMatrix& Mt, int N, double wS,
                             double wT) {
  const std::size_t half = std::size_t{1} << N;
  if (Ms.n != half || Mt.n != half) throw DimensionError("lane_kronecker_sum: lane dimension");
  const auto perm = interleave_map(N);
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
  std::vector<RTrip> trips;
  for (std::size_t a = 0; a < half; ++a)
    for (auto e = Ms.rowptr[a]; e < Ms.rowptr[a + 1]; ++e)
      for (std::size_t b = 0; b < half; ++b)
        trips.emplace_back(inv[a * half + b], inv[Ms.col[e] * half + b], wS * Ms.val[e]);
  for (std::size_t b = 0; b < half; ++b)
    for (auto e = Mt.rowptr[b]; e < Mt.rowptr[b + 1]; ++e)
      for (std::size_t a = 0; a < half; ++a)
        trips.emplace_back(inv[a * half + b], inv[a * half + Mt.col[e]], wT * Mt.val[e]);
  return CsrMatrix::from_triplets(half * half, std::move(trips));
}

ChargeOperator charge_operator(Charge which, int N) {
  ChargeOperator Q{which, N, {}};
  const SiteIndexing site{N, 4};
  Q.diag.resize(site.dim());
  for (std::size_t i = 0; i < site.dim(); ++i) {
    int n = 0;
    for (int j : site.decode(i)) n += which == Charge::Q1 ? (j >> 1) : (j & 1);
    Q.diag[i] = n;
  }
  return Q;
}

double commutator_norm(const ChargeOperator& Q, const CsrMatrix& M) {
  if (Q.diag.size() != M.n) throw DimensionError("commutator_norm: size mismatch");
  double worst = 0.0;
  for (std::size_t r = 0; r < M.n; ++r)
    for (auto e = M.rowptr[r]; e < M.rowptr[r + 1]; ++e)
      worst = std::max(worst, std::abs((Q.diag[r] - Q.diag[M.col[e]]) * M.val[e]));
  return worst;
}

int species_index(int label) {
  switch (label) {
    case -2: return 0;
    case -1: return 1;
    case 1: return 2;
    case 2: return 3;
  }
  throw std::invalid_argument("species label must be one of -2, -1, +1, +2");
}

int species_label(int index) {
  static const int labels[4] = {-2, -1, 1, 2};
  if (index < 0 || index > 3) throw std::invalid_argument("species index out of range");
  return labels[index];
}

}  // namespace d2stoch
