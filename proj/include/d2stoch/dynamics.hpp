#pragma once

#include <array>
#include <string>
#include <vector>

#include "d2stoch/algebra.hpp"
#include "d2stoch/lintensor.hpp"
#include "d2stoch/markov.hpp"
#include "d2stoch/transfer.hpp"

namespace d2stoch {

// ---------------------------------------------------------------- probability vectors

// |j1 ... jN> from species labels (-2, -1, +1, +2).
RVector basis_state(const std::vector<int>& labels);
// Product state; each factor is a length-4 weight vector over (-2, -1, +1, +2).
RVector product_state(const std::vector<std::array<double, 4>>& factors);
// Sum = 1 within 1e-10 and entries >= -1e-12.
bool is_probability(const RVector& v, double tol = 1e-10);

// Comma-separated labels "-2,-1,+1"; throws std::invalid_argument.
std::vector<int> parse_labels(const std::string& text);

// ---------------------------------------------------------------- evolution

struct EvolutionTrace {
  int N = 0;
  std::vector<double> times;
  std::vector<RVector> states;

  double coefficient(std::size_t ti, const std::vector<int>& labels) const;
  std::vector<double> series(const std::vector<int>& labels) const;
};

// Steps between consecutive times with expm_action; times sorted and >= 0.
EvolutionTrace evolve(const Generator& G, const RVector& initial, const std::vector<double>& times,
                      double tol = 1e-13);

// Several initial states evolved in parallel; traces in input order.
std::vector<EvolutionTrace> evolve_many(const Generator& G, const std::vector<RVector>& initials,
                                        const std::vector<double>& times, double tol = 1e-13);

// ---------------------------------------------------------------- steady states

struct SteadyStateFamily {
  Boundary boundary = Boundary::Periodic;
  int N = 0;
  std::vector<RVector> members;
  std::vector<std::string> labels;
  RVector left;  // open: (1,1)^{(x)N} as a row, the left null vector
};

// Periodic: Psi_{m,n}, uniform 1/(C(N,m) C(N,n)) over the (Q1, Q2) = (m, n) sector.
// Twisted: Psi_k = 4^{-N} v_k^{(x)N}. Open: null space of the generator, sum 1.
// normalize: scale each member to unit L1 sum (L2 norm when the sum vanishes).
SteadyStateFamily steady_states(const GeneratorSpec& spec, bool normalize = false);

// max over members of ||M v|| / (||M||_1 ||v||)
double steady_residual(const Generator& G, const SteadyStateFamily& fam);

// Overlap of v with the column span of basis: ||P v|| / ||v||.
double span_overlap(const RVector& v, const CMatrix& basis);

// ---------------------------------------------------------------- twisted

// c_k = 4^N <Psi_k | Phi>, k = 1..4.
std::array<double, 4> twisted_projection(const RVector& initial, int N);
// sum_k c_k Psi_k
RVector twisted_limit(const std::array<double, 4>& c, int N);
// <Psi| prod n_{j,alpha} |Psi> / <Psi|Psi> for an explicit vector.
double quadratic_correlator(const RVector& psi, const std::vector<int>& sites,
                            const std::vector<int>& species);

// ---------------------------------------------------------------- correlations

// Closed form for Psi_{m,n}: product of the lane SSEP correlators. Sites 1-based, distinct.
double correlations_periodic(int m, int n, int N, const std::vector<int>& sites,
                             const std::vector<int>& species);
// sum_i psi_i prod n(i) / sum_i psi_i for a nonnegative state (linear contraction).
double linear_correlator(const RVector& psi, const std::vector<int>& sites,
                         const std::vector<int>& species);

// <n_{k,down}> for one lane of the open chain (sites 1-based).
double lane_profile_open(const BoundaryRates& r, Lane lane, int N, int k);
// <n_{k,species}> as the product of lane profiles.
double density_profile_open(const BoundaryRates& r, int N, int k, int species);

// ---------------------------------------------------------------- short times

struct ShortTimeFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> t, c;
};
// 8 log-spaced points on [1e-3, 5e-2].
std::vector<double> short_time_grid();
// Least-squares slope of log c(t) against log t; throws std::domain_error when the
// coefficient stays below 1e-14 on the whole grid.
ShortTimeFit short_time_order(const Generator& G, const RVector& initial,
                              const std::vector<int>& target, const std::vector<double>& tGrid);

// ---------------------------------------------------------------- Bethe states

enum class StateSide { Ket, Bra };
// Lane state from ordered products of monodromy entries on the reference vector.
// laneSpec: PeriodicSym, TwistedSym or OpenSym with lane Sigma or Tau.
// Bra results are returned as a column holding the row entries.
CVector bethe_state(const TransferSpec& laneSpec, const std::vector<cplx>& roots, StateSide side);
// ||t v - (v^H t v / v^H v) v|| / (||t|| ||v||) at u
double eigenvector_residual(const CMatrix& t, const CVector& v);

}  // namespace d2stoch
