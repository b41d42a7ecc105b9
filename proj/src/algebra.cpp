#include "d2stoch/algebra.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace d2stoch {

std::string lane_name(Lane l) { return l == Lane::Sigma ? "sigma" : "tau"; }

int RKind::dim() const { return (tag == D2Sym || tag == D2Asym) ? 4 : 2; }

void RKind::validate() const {
  auto bad = [](cplx e) { return std::abs(std::sinh(e)) < 1e-14; };
  if (tag == DeformedSixVertex && bad(eta1))
    throw std::invalid_argument("deformed R-matrix requires sinh(eta) != 0");
  if (tag == D2Asym && (bad(eta1) || bad(eta2)))
    throw std::invalid_argument("asymmetric R-matrix requires sinh(eta1), sinh(eta2) != 0");
}

std::string RKind::name() const {
  switch (tag) {
    case D2Sym: return "D2Sym";
    case SixVertex: return "SixVertex";
    case DeformedSixVertex: return "DeformedSixVertex";
    case D2Asym: return "D2Asym";
  }
  return "?";
}

bool BoundaryRates::stochastic() const {
  return s1 >= 0 && s2 >= 0 && t1 >= 0 && t2 >= 0 && s1p <= 0 && s2p <= 0 && t1p <= 0 &&
         t2p <= 0;
}

std::array<double, 4> BoundaryRates::lane(Lane l) const {
  if (l == Lane::Sigma) return {s1, s2, s1p, s2p};
  return {t1, t2, t1p, t2p};
}

BoundaryRates BoundaryRates::table3() {
  return BoundaryRates{0.36, 0.52, 0.66, 0.81, -0.32, -0.48, -0.56, -0.90};
}

std::string KKind::name() const {
  static const char* names[] = {"SymMinus",       "SymPlus",   "SymFactorMinus",
                                "SymFactorPlus",  "AsymMinus", "AsymPlus"};
  std::string n = names[tag];
  if (dim() == 2) n += "(" + lane_name(lane) + ")";
  return n;
}

CMatrix pauli_x() {
  CMatrix X = CMatrix::Zero(2, 2);
  X(0, 1) = X(1, 0) = 1.0;
  return X;
}

CMatrix permutation_matrix(int d) {
  CMatrix P = CMatrix::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) P(j * d + i, i * d + j) = 1.0;
  return P;
}

namespace {

// Printed placement of the symbols in the 16x16 symmetric R-matrix.
enum Sym { A, B, C, D, E, G };
struct Slot {
  int r, c;
  Sym s;
};
constexpr Slot kD2Slots[] = {
    {0, 0, A},   {1, 1, B},   {1, 4, G},   {2, 2, B},   {2, 8, G},    {3, 3, E},
    {3, 6, D},   {3, 9, D},   {3, 12, C},  {4, 1, G},   {4, 4, B},    {5, 5, A},
    {6, 3, D},   {6, 6, E},   {6, 9, C},   {6, 12, D},  {7, 7, B},    {7, 13, G},
    {8, 2, G},   {8, 8, B},   {9, 3, D},   {9, 6, C},   {9, 9, E},    {9, 12, D},
    {10, 10, A}, {11, 11, B}, {11, 14, G}, {12, 3, C},  {12, 6, D},   {12, 9, D},
    {12, 12, E}, {13, 7, G},  {13, 13, B}, {14, 11, G}, {14, 14, B},  {15, 15, A},
};

CMatrix d2sym_from(const cplx vals[6]) {
  CMatrix R = CMatrix::Zero(16, 16);
  for (const auto& s : kD2Slots) R(s.r, s.c) = vals[s.s];
  return R;
}

CMatrix six_vertex(cplx u) {
  CMatrix R = CMatrix::Zero(4, 4);
  R(0, 0) = R(3, 3) = u + 1.0;
  R(1, 1) = R(2, 2) = u;
  R(1, 2) = R(2, 1) = 1.0;
  return R;
}

CMatrix six_vertex_d() {
  CMatrix R = CMatrix::Zero(4, 4);
  R(0, 0) = R(3, 3) = R(1, 1) = R(2, 2) = 1.0;
  return R;
}

CMatrix deformed(cplx u, cplx eta) {
  CMatrix R = CMatrix::Zero(4, 4);
  R(0, 0) = R(3, 3) = std::sinh(u + eta);
  R(1, 1) = std::exp(-eta) * std::sinh(u);
  R(2, 2) = std::exp(eta) * std::sinh(u);
  R(1, 2) = std::exp(-u) * std::sinh(eta);
  R(2, 1) = std::exp(u) * std::sinh(eta);
  return R;
}

CMatrix deformed_d(cplx u, cplx eta) {
  CMatrix R = CMatrix::Zero(4, 4);
  R(0, 0) = R(3, 3) = std::cosh(u + eta);
  R(1, 1) = std::exp(-eta) * std::cosh(u);
  R(2, 2) = std::exp(eta) * std::cosh(u);
  R(1, 2) = -std::exp(-u) * std::sinh(eta);
  R(2, 1) = std::exp(u) * std::sinh(eta);
  return R;
}

}  // namespace

CMatrix lanes_to_site_pair(const CMatrix& sigmaPair, const CMatrix& tauPair) {
  const CMatrix Pi = interleave_permutation(2);
  return Pi.transpose() * kron(sigmaPair, tauPair) * Pi;
}

CMatrix r_matrix(const RKind& kind, cplx u) {
  kind.validate();
  CMatrix R;
  switch (kind.tag) {
    case RKind::D2Sym: {
      const cplx v[6] = {(u + 1.0) * (u + 1.0), u * (u + 1.0), 1.0, u, u * u, u + 1.0};
      R = d2sym_from(v);
      break;
    }
    case RKind::SixVertex: R = six_vertex(u); break;
    case RKind::DeformedSixVertex: R = deformed(u, kind.eta1); break;
    case RKind::D2Asym:
      R = lanes_to_site_pair(deformed(u, kind.eta1), deformed(u, kind.eta2));
      break;
  }
  require_finite(R, "r_matrix");
  return R;
}

CMatrix r_matrix_derivative(const RKind& kind, cplx u) {
  kind.validate();
  switch (kind.tag) {
    case RKind::D2Sym: {
      const cplx v[6] = {2.0 * (u + 1.0), 2.0 * u + 1.0, 0.0, 1.0, 2.0 * u, 1.0};
      return d2sym_from(v);
    }
    case RKind::SixVertex: return six_vertex_d();
    case RKind::DeformedSixVertex: return deformed_d(u, kind.eta1);
    case RKind::D2Asym: {
      const CMatrix s = deformed(u, kind.eta1), t = deformed(u, kind.eta2);
      const CMatrix ds = deformed_d(u, kind.eta1), dt = deformed_d(u, kind.eta2);
      return lanes_to_site_pair(ds, t) + lanes_to_site_pair(s, dt);
    }
  }
  return {};
}

namespace {

CMatrix sym_factor_minus(double a, double b, cplx u) {
  CMatrix K(2, 2);
  K << 1.0 - (a - b) * u, 2.0 * b * u, 2.0 * a * u, 1.0 + (a - b) * u;
  return K;
}

CMatrix sym_factor_minus_d(double a, double b) {
  CMatrix K(2, 2);
  K << -(a - b), 2.0 * b, 2.0 * a, (a - b);
  return K;
}

CMatrix asym_minus(double a, double b, cplx eta, cplx u) {
  CMatrix K(2, 2);
  const cplx sh = std::sinh(u), se = std::sinh(eta);
  K << std::exp(-u) * (a - b) * sh - se, -b * std::sinh(2.0 * u), -a * std::sinh(2.0 * u),
      std::exp(u) * (b - a) * sh - se;
  return K;
}

CMatrix asym_minus_d(double a, double b, cplx u) {
  CMatrix K(2, 2);
  K << (a - b) * std::exp(-2.0 * u), -2.0 * b * std::cosh(2.0 * u), -2.0 * a * std::cosh(2.0 * u),
      (b - a) * std::exp(2.0 * u);
  return K;
}

KKind lane_kind(const KKind& k, Lane l) {
  KKind out = k;
  out.lane = l;
  out.tag = k.is_plus() ? KKind::SymFactorPlus : KKind::SymFactorMinus;
  return out;
}

}  // namespace

CMatrix asym_g(cplx eta) {
  CMatrix G = CMatrix::Zero(2, 2);
  G(0, 0) = std::exp(-eta);
  G(1, 1) = std::exp(eta);
  return G;
}

CMatrix k_matrix(const KKind& kind, cplx u) {
  const auto r = kind.rates.lane(kind.lane);
  CMatrix K;
  switch (kind.tag) {
    case KKind::SymFactorMinus: K = sym_factor_minus(r[0], r[1], u); break;
    case KKind::SymFactorPlus: K = sym_factor_minus(r[2], r[3], -u - 1.0); break;
    case KKind::SymMinus:
    case KKind::SymPlus:
      K = kron(k_matrix(lane_kind(kind, Lane::Sigma), u), k_matrix(lane_kind(kind, Lane::Tau), u));
      break;
    case KKind::AsymMinus: K = asym_minus(r[0], r[1], kind.eta, u); break;
    case KKind::AsymPlus:
      K = asym_g(kind.eta) * asym_minus(r[2], r[3], kind.eta, -u - kind.eta);
      break;
  }
  require_finite(K, "k_matrix");
  return K;
}

CMatrix k_matrix_derivative(const KKind& kind, cplx u) {
  const auto r = kind.rates.lane(kind.lane);
  switch (kind.tag) {
    case KKind::SymFactorMinus: return sym_factor_minus_d(r[0], r[1]);
    case KKind::SymFactorPlus: return -sym_factor_minus_d(r[2], r[3]);
    case KKind::SymMinus:
    case KKind::SymPlus: {
      const KKind ks = lane_kind(kind, Lane::Sigma), kt = lane_kind(kind, Lane::Tau);
      return kron(k_matrix_derivative(ks, u), k_matrix(kt, u)) +
             kron(k_matrix(ks, u), k_matrix_derivative(kt, u));
    }
    case KKind::AsymMinus: return asym_minus_d(r[0], r[1], u);
    case KKind::AsymPlus: return -(asym_g(kind.eta) * asym_minus_d(r[2], r[3], -u - kind.eta));
  }
  return {};
}

CMatrix k_minus_printed(const BoundaryRates& r, cplx u) {
  const cplx S = r.s1 - r.s2, T = r.t1 - r.t2;
  const double s1 = r.s1, s2 = r.s2, t1 = r.t1, t2 = r.t2;
  CMatrix K(4, 4);
  K << (1.0 - S * u) * (1.0 - T * u), 2.0 * t2 * u * (1.0 - S * u), 2.0 * s2 * u * (1.0 - T * u),
      4.0 * s2 * t2 * u * u,
      //
      2.0 * t1 * u * (1.0 - S * u), (1.0 - S * u) * (1.0 + T * u), 4.0 * s2 * t1 * u * u,
      2.0 * s2 * u * (1.0 + T * u),
      //
      2.0 * s1 * u * (1.0 - T * u), 4.0 * s1 * t2 * u * u, (1.0 + S * u) * (1.0 - T * u),
      2.0 * t2 * u * (1.0 + S * u),
      //
      4.0 * s1 * t1 * u * u, 2.0 * s1 * (1.0 + T * u), 2.0 * t1 * u * (1.0 + S * u),
      (1.0 + S * u) * (1.0 + T * u);
  return K;
}

std::vector<std::pair<cplx, cplx>> sample_pairs(int count, std::uint64_t seed, double box) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-box, box);
  std::vector<std::pair<cplx, cplx>> out;
  out.reserve(count);
  // rejection sampling inside the disk |u| <= box
  auto draw = [&] {
    for (;;) {
      const cplx z(U(rng), U(rng));
      if (std::abs(z) <= box) return z;
    }
  };
  for (int i = 0; i < count; ++i) {
    const cplx u = draw();
    const cplx v = draw();
    out.emplace_back(u, v);
  }
  return out;
}

namespace {

using SpC = Eigen::SparseMatrix<cplx>;

SpC sparse_embed(const CMatrix& op, const std::vector<int>& legs, const std::vector<int>& dims) {
  std::size_t D = 1;
  for (int d : dims) D *= d;
  SpC S(D, D);
  auto t = embed_triplets(op, legs, dims);
  S.setFromTriplets(t.begin(), t.end());
  return S;
}

double sparse_max_abs(const SpC& S) {
  double m = 0.0;
  for (int k = 0; k < S.outerSize(); ++k)
    for (SpC::InnerIterator it(S, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

}  // namespace

double ybe_residual(const std::function<CMatrix(cplx)>& R, int d, cplx u, cplx v) {
  const std::vector<int> dims{d, d, d};
  const CMatrix Ruv = R(u - v), Ru = R(u), Rv = R(v);
  const SpC R12 = sparse_embed(Ruv, {0, 1}, dims);
  const SpC R13 = sparse_embed(Ru, {0, 2}, dims);
  const SpC R23 = sparse_embed(Rv, {1, 2}, dims);
  const SpC lhs = R12 * R13 * R23;
  const SpC rhs = R23 * R13 * R12;
  return sparse_max_abs(lhs - rhs);
}

VerifyReport verify_ybe(const RKind& kind, int samples, std::uint64_t seed, double threshold) {
  VerifyReport rep;
  rep.identity = "yang-baxter";
  rep.kind = kind.name();
  rep.samples = samples;
  rep.seed = seed;
  rep.threshold = threshold;
  auto R = [&](cplx u) { return r_matrix(kind, u); };
  // also relative to the product of entry scales, the roundoff floor of the products
  double rel = 0.0;
  for (const auto& [u, v] : sample_pairs(samples, seed)) {
    const double r = ybe_residual(R, kind.dim(), u, v);
    rep.maxResidual = std::max(rep.maxResidual, r);
    rel = std::max(rel, r / (max_abs(R(u - v)) * max_abs(R(u)) * max_abs(R(v))));
  }
  rep.extra["maxRelative"] = rel;
  rep.pass = rep.maxResidual < threshold;
  return rep;
}

cplx rho1(cplx u) { return (u * u - 1.0) * (u * u - 1.0); }

CMatrix partial_transpose_first(const CMatrix& X, int d) {
  CMatrix Y(X.rows(), X.cols());
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) Y(k * d + j, i * d + l) = X(i * d + j, k * d + l);
  return Y;
}

RPropertiesReport verify_r_properties(const RKind& kind, const std::vector<cplx>& samples) {
  RPropertiesReport rep;
  const int d = kind.dim();
  const CMatrix P = permutation_matrix(d);
  CMatrix R0 = r_matrix(kind, 0.0);
  if (kind.tag == RKind::DeformedSixVertex || kind.tag == RKind::D2Asym) {
    // R(0) = sinh(eta) P per lane; normalize before comparing
    const cplx scale = kind.tag == RKind::D2Asym ? std::sinh(kind.eta1) * std::sinh(kind.eta2)
                                                 : std::sinh(kind.eta1);
    R0 /= scale;
  }
  rep.regularity = max_abs(R0 - P);
  if (kind.tag != RKind::D2Sym) return rep;
  rep.symmetricChecks = true;
  const CMatrix I = CMatrix::Identity(d * d, d * d);
  for (cplx u : samples) {
    const CMatrix R12 = r_matrix(kind, u);
    const CMatrix R21m = P * r_matrix(kind, -u) * P;
    rep.unitarity = std::max(rep.unitarity, max_abs(R12 * R21m - rho1(u) * I));
    const CMatrix R21c = P * r_matrix(kind, -u - 2.0) * P;
    const CMatrix cross =
        partial_transpose_first(R12, d) * partial_transpose_first(R21c, d) - rho1(u + 1.0) * I;
    rep.crossing = std::max(rep.crossing, max_abs(cross));
  }
  return rep;
}

namespace {

struct REOps {
  std::function<CMatrix(cplx)> R;
  std::function<CMatrix(cplx)> K;
  CMatrix G;  // identity for symmetric pairings
  cplx shift;  // -2 or -2 eta
  int d;
};

double re_residual(const REOps& o, cplx u, cplx v, bool dual) {
  const std::vector<int> dims{o.d, o.d};
  const CMatrix P = permutation_matrix(o.d);
  auto R12 = [&](cplx x) { return o.R(x); };
  auto R21 = [&](cplx x) { return CMatrix(P * o.R(x) * P); };
  const CMatrix Ku = o.K(u), Kv = o.K(v);
  const CMatrix K1 = embed(Ku, {0}, dims), K2 = embed(Kv, {1}, dims);
  if (!dual) {
    const CMatrix lhs = R12(u - v) * K1 * R21(u + v) * K2;
    const CMatrix rhs = K2 * R12(u + v) * K1 * R21(u - v);
    return max_abs(lhs - rhs);
  }
  const CMatrix G1 = embed(o.G, {0}, dims);
  const CMatrix G1i = embed(CMatrix(o.G.inverse()), {0}, dims);
  const cplx w = -u - v + o.shift;
  const CMatrix lhs = R12(-u + v) * K1 * G1i * R21(w) * G1 * K2;
  const CMatrix rhs = K2 * G1 * R12(w) * G1i * K1 * R21(-u + v);
  return max_abs(lhs - rhs);
}

}  // namespace

VerifyReport verify_re(const RESpec& spec, int samples, std::uint64_t seed, double threshold) {
  VerifyReport rep;
  rep.identity = spec.dual ? "dual-reflection" : "reflection";
  rep.samples = samples;
  rep.seed = seed;
  rep.threshold = threshold;
  REOps o;
  KKind k;
  k.rates = spec.rates;
  k.lane = spec.lane;
  k.eta = spec.eta;
  switch (spec.pairing) {
    case REPairing::SymLane: {
      const RKind rk = RKind::six_vertex();
      o.R = [rk](cplx x) { return r_matrix(rk, x); };
      k.tag = spec.dual ? KKind::SymFactorPlus : KKind::SymFactorMinus;
      o.G = CMatrix::Identity(2, 2);
      o.shift = -2.0;
      o.d = 2;
      break;
    }
    case REPairing::SymFull: {
      const RKind rk = RKind::d2sym();
      o.R = [rk](cplx x) { return r_matrix(rk, x); };
      k.tag = spec.dual ? KKind::SymPlus : KKind::SymMinus;
      o.G = CMatrix::Identity(4, 4);
      o.shift = -2.0;
      o.d = 4;
      break;
    }
    case REPairing::AsymLane: {
      const RKind rk = RKind::deformed(spec.eta);
      o.R = [rk](cplx x) { return r_matrix(rk, x); };
      k.tag = spec.dual ? KKind::AsymPlus : KKind::AsymMinus;
      o.G = asym_g(spec.eta);
      o.shift = -2.0 * spec.eta;
      o.d = 2;
      break;
    }
  }
  rep.kind = o.d == 4 ? (spec.dual ? "D2Sym/SymPlus" : "D2Sym/SymMinus")
                      : (spec.pairing == REPairing::AsymLane ? "DeformedSixVertex/" : "SixVertex/") +
                            k.name();
  if (spec.usePrintedK) {
    if (spec.pairing != REPairing::SymFull || spec.dual)
      throw std::invalid_argument("verify_re: printed K only exists for the full symmetric K^-");
    const BoundaryRates r = spec.rates;
    o.K = [r](cplx x) { return k_minus_printed(r, x); };
    rep.kind += "(printed)";
  } else {
    o.K = [k](cplx x) { return k_matrix(k, x); };
  }
  for (const auto& [u, v] : sample_pairs(samples, seed))
    rep.maxResidual = std::max(rep.maxResidual, re_residual(o, u, v, spec.dual));
  rep.pass = rep.maxResidual < threshold;
  if (spec.pairing == REPairing::SymFull && !spec.dual) {
    // flag the printed element list against the factorized form
    KKind km = k;
    km.tag = KKind::SymMinus;
    double worst = 0.0;
    for (const auto& [u, v] : sample_pairs(8, seed + 1)) {
      (void)v;
      worst = std::max(worst, max_abs(k_minus_printed(spec.rates, u) - k_matrix(km, u)));
    }
    rep.extra["printedVsFactorizedK"] = worst;
    if (worst > 1e-12)
      rep.notes.push_back(
          "printed K^- element k42 differs from the factorized form (missing factor u); "
          "factorized form used");
  }
  return rep;
}

double twist_residual(const std::function<CMatrix(cplx)>& R, const CMatrix& G,
                      const std::vector<cplx>& us) {
  const CMatrix GG = kron(G, G);
  double worst = 0.0;
  for (cplx u : us) {
    const CMatrix Ru = R(u);
    worst = std::max(worst, max_abs(Ru * GG - GG * Ru));
  }
  return worst;
}

VerifyReport verify_twist(const RKind& kind, int samples, std::uint64_t seed, double threshold) {
  if (kind.tag != RKind::D2Sym && kind.tag != RKind::SixVertex)
    throw std::invalid_argument("verify_twist: only D2Sym or SixVertex");
  VerifyReport rep;
  rep.identity = "twist";
  rep.kind = kind.name();
  rep.samples = samples;
  rep.seed = seed;
  rep.threshold = threshold;
  const CMatrix G = kind.tag == RKind::D2Sym ? kron(pauli_x(), pauli_x()) : pauli_x();
  std::vector<cplx> us;
  for (const auto& p : sample_pairs(samples, seed)) us.push_back(p.first);
  rep.maxResidual = twist_residual([&](cplx u) { return r_matrix(kind, u); }, G, us);
  rep.pass = rep.maxResidual < threshold;
  return rep;
}

GaugeReport gauge_check(int samples, std::uint64_t seed) {
  GaugeReport rep;
  CMatrix F = CMatrix::Identity(4, 4);
  F(2, 2) = -1.0;
  rep.fSquared = max_abs(F * F - CMatrix::Identity(4, 4));
  const CMatrix FF = kron(F, F);
  const RKind k = RKind::d2sym();
  auto conj = [&](cplx u) { return CMatrix(FF * r_matrix(k, u) * FF); };
  for (const auto& [u, v] : sample_pairs(samples, seed)) {
    const CMatrix twice = FF * conj(u) * FF;
    rep.doubleConjugation = std::max(rep.doubleConjugation, max_abs(twice - r_matrix(k, u)));
    rep.conjugatedYbe = std::max(rep.conjugatedYbe, ybe_residual(conj, 4, u, v));
  }
  return rep;
}

}  // namespace d2stoch
