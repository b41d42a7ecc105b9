#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "d2stoch/lintensor.hpp"

namespace d2stoch {

enum class Lane { Sigma, Tau };
std::string lane_name(Lane l);

struct RKind {
  enum Tag { D2Sym, SixVertex, DeformedSixVertex, D2Asym };
  Tag tag = D2Sym;
  cplx eta1{0.0};  // DeformedSixVertex uses eta1 only
  cplx eta2{0.0};

  static RKind d2sym() { return {D2Sym, 0.0, 0.0}; }
  static RKind six_vertex() { return {SixVertex, 0.0, 0.0}; }
  static RKind deformed(cplx eta) { return {DeformedSixVertex, eta, 0.0}; }
  static RKind d2asym(cplx e1, cplx e2) { return {D2Asym, e1, e2}; }

  int dim() const;      // local space dimension (2 or 4)
  void validate() const;  // sinh(eta) != 0 for deformed kinds
  std::string name() const;
};

// Left rates s, t >= 0; right rates s', t' <= 0 in the stochastic regime.
struct BoundaryRates {
  double s1 = 0, s2 = 0, t1 = 0, t2 = 0;
  double s1p = 0, s2p = 0, t1p = 0, t2p = 0;

  double w1() const { return s1 + s2; }
  double w2() const { return s1p + s2p; }
  double w1t() const { return t1 + t2; }
  double w2t() const { return t1p + t2p; }
  bool stochastic() const;
  // (left1, left2, right1, right2) for one lane
  std::array<double, 4> lane(Lane l) const;

  static BoundaryRates table3();
};

struct KKind {
  enum Tag { SymMinus, SymPlus, SymFactorMinus, SymFactorPlus, AsymMinus, AsymPlus };
  Tag tag = SymMinus;
  Lane lane = Lane::Sigma;
  cplx eta{0.0};  // asymmetric lane deformation
  BoundaryRates rates;

  bool is_plus() const { return tag == SymPlus || tag == SymFactorPlus || tag == AsymPlus; }
  int dim() const { return (tag == SymMinus || tag == SymPlus) ? 4 : 2; }
  std::string name() const;
};

CMatrix pauli_x();
CMatrix permutation_matrix(int d);  // P on C^d (x) C^d

CMatrix r_matrix(const RKind& kind, cplx u);
CMatrix r_matrix_derivative(const RKind& kind, cplx u);
// Six-vertex lane matrices placed on two 4-dim sites, lanes (sigma sigma)(tau tau) reordered.
CMatrix lanes_to_site_pair(const CMatrix& sigmaPair, const CMatrix& tauPair);

CMatrix k_matrix(const KKind& kind, cplx u);
CMatrix k_matrix_derivative(const KKind& kind, cplx u);
// Symmetric K^- exactly as its element list is printed (k42 without the factor u).
CMatrix k_minus_printed(const BoundaryRates& r, cplx u);
// G(lane) = diag(e^{-eta}, e^{eta}) used by the asymmetric dual reflection equation.
CMatrix asym_g(cplx eta);

struct VerifyReport {
  std::string identity;
  std::string kind;
  int samples = 0;
  std::uint64_t seed = 0;
  double maxResidual = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::map<std::string, double> extra;
  std::vector<std::string> notes;
};

// Seeded sample points in the disk |u| <= box.
std::vector<std::pair<cplx, cplx>> sample_pairs(int count, std::uint64_t seed, double box = 2.0);

VerifyReport verify_ybe(const RKind& kind, int samples, std::uint64_t seed, double threshold = 1e-10);
double ybe_residual(const std::function<CMatrix(cplx)>& R, int d, cplx u, cplx v);

struct RPropertiesReport {
  double regularity = 0.0;
  double unitarity = 0.0;
  double crossing = 0.0;
  bool symmetricChecks = false;  // unitarity/crossing only defined for D2Sym
};
RPropertiesReport verify_r_properties(const RKind& kind, const std::vector<cplx>& samples);
cplx rho1(cplx u);
CMatrix partial_transpose_first(const CMatrix& X, int d);

enum class REPairing { SymLane, SymFull, AsymLane };
struct RESpec {
  REPairing pairing = REPairing::SymLane;
  Lane lane = Lane::Sigma;
  cplx eta{0.0};
  BoundaryRates rates;
  bool dual = false;
  bool usePrintedK = false;  // symmetric full only; exposes the k42 discrepancy
};
VerifyReport verify_re(const RESpec& spec, int samples, std::uint64_t seed, double threshold = 1e-9);

VerifyReport verify_twist(const RKind& kind, int samples, std::uint64_t seed, double threshold = 1e-13);
double twist_residual(const std::function<CMatrix(cplx)>& R, const CMatrix& G,
                      const std::vector<cplx>& us);

struct GaugeReport {
  double fSquared = 0.0;
  double doubleConjugation = 0.0;
  double conjugatedYbe = 0.0;
};
GaugeReport gauge_check(int samples = 20, std::uint64_t seed = 7);

}  // namespace d2stoch
