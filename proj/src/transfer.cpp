#include "d2stoch/transfer.hpp"

#include <cmath>
#include <stdexcept>

namespace d2stoch {

std::string construction_name(Construction c) {
  switch (c) {
    case Construction::PeriodicSym: return "periodic-sym";
    case Construction::TwistedSym: return "twisted-sym";
    case Construction::OpenSym: return "open-sym";
    case Construction::PeriodicAsym: return "periodic-asym";
    case Construction::OpenAsym: return "open-asym";
  }
  return "?";
}

bool TransferSpec::open() const {
  return construction == Construction::OpenSym || construction == Construction::OpenAsym;
}

bool TransferSpec::asymmetric() const {
  return construction == Construction::PeriodicAsym || construction == Construction::OpenAsym;
}

TransferSpec TransferSpec::with_lane(LaneSel l) const {
  TransferSpec s = *this;
  s.lane = l;
  return s;
}

void TransferSpec::validate() const {
  if (N < 1) throw std::invalid_argument("transfer: N must be >= 1");
  if (asymmetric()) rkind().validate();
}

RKind TransferSpec::rkind() const {
  if (!asymmetric()) return lane == LaneSel::Full ? RKind::d2sym() : RKind::six_vertex();
  switch (lane) {
    case LaneSel::Full: return RKind::d2asym(eta1, eta2);
    case LaneSel::Sigma: return RKind::deformed(eta1);
    case LaneSel::Tau: return RKind::deformed(eta2);
  }
  return {};
}

GeneratorSpec TransferSpec::generator_spec() const {
  GeneratorSpec g;
  g.N = N;
  g.symmetry = asymmetric() ? Symmetry::Asymmetric : Symmetry::Symmetric;
  g.boundary = construction == Construction::TwistedSym ? Boundary::Twisted
               : open()                                 ? Boundary::Open
                                                        : Boundary::Periodic;
  g.eta1 = eta1;
  g.eta2 = eta2;
  g.rates = rates;
  g.variant = AsymVariant::RawM;
  return g;
}

CMatrix r_of(const TransferSpec& spec, cplx u) { return r_matrix(spec.rkind(), u); }

namespace {

KKind lane_k(const TransferSpec& spec, Lane l, bool plus) {
  KKind k;
  k.lane = l;
  k.rates = spec.rates;
  if (spec.asymmetric()) {
    k.tag = plus ? KKind::AsymPlus : KKind::AsymMinus;
    k.eta = l == Lane::Sigma ? spec.eta1 : spec.eta2;
  } else {
    k.tag = plus ? KKind::SymFactorPlus : KKind::SymFactorMinus;
  }
  return k;
}

CMatrix k_of(const TransferSpec& spec, cplx u, bool plus, bool derivative) {
  if (!spec.open()) throw std::invalid_argument("K-matrix requested for a closed chain");
  auto km = [&](Lane l, bool d) {
    const KKind k = lane_k(spec, l, plus);
    return d ? k_matrix_derivative(k, u) : k_matrix(k, u);
  };
  switch (spec.lane) {
    case LaneSel::Sigma: return km(Lane::Sigma, derivative);
    case LaneSel::Tau: return km(Lane::Tau, derivative);
    case LaneSel::Full: break;
  }
  if (!spec.asymmetric()) {
    KKind k;
    k.tag = plus ? KKind::SymPlus : KKind::SymMinus;
    k.rates = spec.rates;
    return derivative ? k_matrix_derivative(k, u) : k_matrix(k, u);
  }
  if (!derivative) return kron(km(Lane::Sigma, false), km(Lane::Tau, false));
  return kron(km(Lane::Sigma, true), km(Lane::Tau, false)) +
         kron(km(Lane::Sigma, false), km(Lane::Tau, true));
}

std::vector<int> dims_of(const TransferSpec& spec) {
  return std::vector<int>(spec.N + 1, spec.site_dim());
}

// Ordered factor list of the object whose aux trace is t(u).
struct Factor {
  CMatrix value, deriv;
};

std::vector<Factor> factors(const TransferSpec& spec, cplx u, bool withDerivs) {
  spec.validate();
  const auto dims = dims_of(spec);
  const RKind rk = spec.rkind();
  const CMatrix R = r_matrix(rk, u);
  const CMatrix dR = withDerivs ? r_matrix_derivative(rk, u) : CMatrix();
  auto emb = [&](const CMatrix& op, std::vector<int> legs) {
    return op.size() ? embed(op, legs, dims) : CMatrix();
  };
  std::vector<Factor> f;
  if (spec.construction == Construction::TwistedSym)
    f.push_back({embed(twist_of(spec), {0}, dims), CMatrix()});
  if (spec.open())
    f.push_back({emb(k_of(spec, u, true, false), {0}),
                 withDerivs ? emb(k_of(spec, u, true, true), {0}) : CMatrix()});
  for (int k = spec.N; k >= 1; --k) f.push_back({emb(R, {0, k}), emb(dR, {0, k})});
  if (spec.open()) {
    f.push_back({emb(k_of(spec, u, false, false), {0}),
                 withDerivs ? emb(k_of(spec, u, false, true), {0}) : CMatrix()});
    for (int k = 1; k <= spec.N; ++k) f.push_back({emb(R, {k, 0}), emb(dR, {k, 0})});
  }
  return f;
}

CMatrix product(const std::vector<Factor>& f, std::size_t from, std::size_t to) {
  const auto n = f.front().value.rows();
  CMatrix P = CMatrix::Identity(n, n);
  for (std::size_t i = from; i < to; ++i) P = P * f[i].value;
  return P;
}

Eigen::Index total(const std::vector<int>& dims) {
  Eigen::Index D = 1;
  for (int d : dims) D *= d;
  return D;
}

CMatrix ordered_product(const TransferSpec& spec, cplx u, bool hat) {
  const auto dims = dims_of(spec);
  const CMatrix R = r_of(spec, u);
  const auto D = total(dims);
  CMatrix T = CMatrix::Identity(D, D);
  if (!hat)
    for (int k = spec.N; k >= 1; --k) T = T * embed(R, {0, k}, dims);
  else
    for (int k = 1; k <= spec.N; ++k) T = T * embed(R, {k, 0}, dims);
  return T;
}

}  // namespace

CMatrix k_minus_of(const TransferSpec& spec, cplx u) { return k_of(spec, u, false, false); }
CMatrix k_plus_of(const TransferSpec& spec, cplx u) { return k_of(spec, u, true, false); }

CMatrix twist_of(const TransferSpec& spec) {
  return spec.lane == LaneSel::Full ? kron(pauli_x(), pauli_x()) : pauli_x();
}

CMatrix monodromy(const TransferSpec& spec, cplx u) { return ordered_product(spec, u, false); }
CMatrix monodromy_hat(const TransferSpec& spec, cplx u) { return ordered_product(spec, u, true); }

CMatrix double_row_monodromy(const TransferSpec& spec, cplx u) {
  const auto dims = dims_of(spec);
  return monodromy(spec, u) * embed(k_minus_of(spec, u), {0}, dims) * monodromy_hat(spec, u);
}

CMatrix transfer(const TransferSpec& spec, cplx u) {
  const auto f = factors(spec, u, false);
  return partial_trace_aux(product(f, 0, f.size()), spec.aux_dim());
}

CMatrix transfer_derivative(const TransferSpec& spec, cplx u) {
  const auto f = factors(spec, u, true);
  const std::size_t n = f.size();
  const auto D = f.front().value.rows();
  // prefix[i] = f0 ... f_{i-1}; suffix[i] = f_i ... f_{n-1}
  std::vector<CMatrix> prefix(n + 1), suffix(n + 1);
  prefix[0] = CMatrix::Identity(D, D);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] * f[i].value;
  suffix[n] = CMatrix::Identity(D, D);
  for (std::size_t i = n; i-- > 0;) suffix[i] = f[i].value * suffix[i + 1];
  CMatrix dT = CMatrix::Zero(D, D);
  for (std::size_t i = 0; i < n; ++i)
    if (f[i].deriv.size()) dT += prefix[i] * f[i].deriv * suffix[i + 1];
  return partial_trace_aux(dT, spec.aux_dim());
}

Extraction extract_generator(const TransferSpec& spec, double h) {
  spec.validate();
  const CMatrix t0 = transfer(spec, 0.0);
  const Eigen::PartialPivLU<CMatrix> lu(t0.transpose());  // X^T = t0^{-T} dt^T
  const CMatrix dNum = num_derivative([&](cplx u) { return transfer(spec, u); }, 0.0, h);
  const CMatrix X = lu.solve(dNum.transpose()).transpose();  // t'(0) t(0)^{-1}
  const CMatrix Xa = lu.solve(transfer_derivative(spec, 0.0).transpose()).transpose();
  Extraction ex;
  ex.analyticDiff = max_abs(X - Xa);
  const int N = spec.N;
  const bool lane = spec.lane != LaneSel::Full;
  const double etaLane = spec.lane == LaneSel::Tau ? spec.eta2 : spec.eta1;
  switch (spec.construction) {
    case Construction::PeriodicSym:
    case Construction::TwistedSym:
      ex.constant = lane ? N : 2.0 * N;
      ex.formula = lane ? "dlog t(0) - N" : "dlog t(0) - 2N";
      break;
    case Construction::OpenSym:
      ex.scale = 0.5;
      ex.constantDerived = true;
      ex.formula = "(1/2) dlog t(0) - const";
      break;
    case Construction::PeriodicAsym:
      if (lane) {
        ex.scale = std::sinh(etaLane);
        ex.constant = N * std::cosh(etaLane);
        ex.formula = "sinh(eta) dlog t(0) - N cosh(eta)";
      } else {
        ex.constant = N * (1.0 / std::tanh(spec.eta1) + 1.0 / std::tanh(spec.eta2));
        ex.formula = "dlog t(0) - N (coth eta1 + coth eta2)";
      }
      break;
    case Construction::OpenAsym:
      ex.scale = lane ? 0.5 * std::sinh(etaLane) : 0.5;
      ex.constantDerived = true;
      ex.formula = lane ? "sinh(eta) (1/2) dlog t(0) - const" : "(1/2) dlog t(0) - const";
      break;
  }
  const CMatrix Y = ex.scale * X;
  const Eigen::RowVectorXcd cs = Y.colwise().sum();
  if (ex.constantDerived) ex.constant = cs.mean();
  for (Eigen::Index c = 0; c < cs.size(); ++c)
    ex.columnSpread = std::max(ex.columnSpread, std::abs(cs(c) - ex.constant));
  if (ex.constantDerived && ex.columnSpread > 1e-6 * std::max(1.0, max_abs(Y)))
    throw ExtractionError("extract_generator: column sums of the log-derivative are not constant");
  ex.M = Y - ex.constant * CMatrix::Identity(Y.rows(), Y.cols());
  return ex;
}

RMatrix reference_generator(const TransferSpec& spec) {
  GeneratorSpec g = spec.generator_spec();
  if (spec.lane != LaneSel::Full) {
    const auto lanes = lane_generators(g);
    return spec.lane == LaneSel::Sigma ? lanes.first.dense() : lanes.second.dense();
  }
  return build_generator(g).dense();
}

double rtt_residual(const TransferSpec& spec, cplx u, cplx v) {
  // R_{12}(u-v) T_1(u) T_2(v) = T_2(v) T_1(u) R_{12}(u-v), two aux legs before the sites
  const int d = spec.site_dim();
  std::vector<int> dims(spec.N + 2, d);
  const CMatrix R = r_of(spec, u - v);
  const CMatrix Ru = r_of(spec, u), Rv = r_of(spec, v);
  const auto D = total(dims);
  CMatrix T1 = CMatrix::Identity(D, D), T2 = T1;
  for (int k = spec.N; k >= 1; --k) {
    T1 = T1 * embed(Ru, {0, k + 1}, dims);
    T2 = T2 * embed(Rv, {1, k + 1}, dims);
  }
  const CMatrix R12 = embed(R, {0, 1}, dims);
  return max_abs(R12 * T1 * T2 - T2 * T1 * R12);
}

double commutator_residual(const TransferSpec& spec, cplx u, cplx v) {
  const CMatrix tu = transfer(spec, u), tv = transfer(spec, v);
  return max_abs(tu * tv - tv * tu) / (max_abs(tu) * max_abs(tv));
}

double factorization_residual(const TransferSpec& spec, cplx u) {
  if (spec.lane != LaneSel::Full) throw std::invalid_argument("factorization needs the full chain");
  const CMatrix Pi = interleave_permutation(spec.N);
  const CMatrix full = Pi * transfer(spec, u) * Pi.transpose();
  const CMatrix lanes = kron(transfer(spec.with_lane(LaneSel::Sigma), u),
                             transfer(spec.with_lane(LaneSel::Tau), u));
  return max_abs(full - lanes);
}

}  // namespace d2stoch
