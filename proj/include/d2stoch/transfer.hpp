#pragma once

#include <string>

#include "d2stoch/algebra.hpp"
#include "d2stoch/lintensor.hpp"
#include "d2stoch/markov.hpp"

namespace d2stoch {

enum class Construction { PeriodicSym, TwistedSym, OpenSym, PeriodicAsym, OpenAsym };
enum class LaneSel { Full, Sigma, Tau };

std::string construction_name(Construction c);

struct TransferSpec {
  Construction construction = Construction::PeriodicSym;
  int N = 2;
  LaneSel lane = LaneSel::Full;
  double eta1 = 0.0, eta2 = 0.0;
  BoundaryRates rates;

  bool open() const;
  bool asymmetric() const;
  int aux_dim() const { return lane == LaneSel::Full ? 4 : 2; }
  int site_dim() const { return aux_dim(); }
  RKind rkind() const;
  TransferSpec with_lane(LaneSel l) const;
  void validate() const;
  // The matching explicitly built generator (site basis, or one lane).
  GeneratorSpec generator_spec() const;
};

CMatrix r_of(const TransferSpec& spec, cplx u);
CMatrix k_minus_of(const TransferSpec& spec, cplx u);
CMatrix k_plus_of(const TransferSpec& spec, cplx u);
CMatrix twist_of(const TransferSpec& spec);

// T0(u) = R_{0N}(u) ... R_{01}(u); aux is the slowest leg.
CMatrix monodromy(const TransferSpec& spec, cplx u);
// R_{10}(u) ... R_{N0}(u)
CMatrix monodromy_hat(const TransferSpec& spec, cplx u);
// T(u) K^-(u) That(u), still carrying the aux leg.
CMatrix double_row_monodromy(const TransferSpec& spec, cplx u);

CMatrix transfer(const TransferSpec& spec, cplx u);
CMatrix transfer_derivative(const TransferSpec& spec, cplx u);  // analytic, product rule

struct Extraction {
  CMatrix M;
  cplx scale{1.0};
  cplx constant{0.0};
  bool constantDerived = false;  // true when fixed by zero column sums
  double columnSpread = 0.0;     // max |colsum - constant| before subtraction
  double analyticDiff = 0.0;     // numeric vs product-rule log-derivative
  std::string formula;
};
struct ExtractionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
Extraction extract_generator(const TransferSpec& spec, double h = 1e-4);

// Reference generator for the extraction, built from the explicit local terms.
// Full periodic asym uses the coth-rate form; full open asym the 1/sinh-weighted
// Kronecker sum; lanes use the unweighted lane generators.
RMatrix reference_generator(const TransferSpec& spec);

double rtt_residual(const TransferSpec& spec, cplx u, cplx v);
// ||[t(u), t(v)]|| / (||t(u)|| ||t(v)||)
double commutator_residual(const TransferSpec& spec, cplx u, cplx v);
// ||Pi t(u) Pi^T - t_sigma(u) (x) t_tau(u)||, Full lane spec
double factorization_residual(const TransferSpec& spec, cplx u);

}  // namespace d2stoch
