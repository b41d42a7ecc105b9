#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "d2stoch/algebra.hpp"
#include "d2stoch/lintensor.hpp"

namespace d2stoch {

enum class Boundary { Periodic, Twisted, Open };
enum class Symmetry { Symmetric, Asymmetric };
// RawM: coth rates; EquivalentMbar: q rates (the lane Kronecker sum).
enum class AsymVariant { RawM, EquivalentMbar };

struct GeneratorSpec {
  int N = 2;
  Boundary boundary = Boundary::Periodic;
  Symmetry symmetry = Symmetry::Symmetric;
  double eta1 = 0.0, eta2 = 0.0;  // q_i = e^{eta_i}
  AsymVariant variant = AsymVariant::EquivalentMbar;
  BoundaryRates rates;  // open boundary only

  double q1() const;
  double q2() const;
  double eta(Lane l) const { return l == Lane::Sigma ? eta1 : eta2; }
  void validate() const;  // throws std::invalid_argument
  std::string name() const;
};

struct StochasticityViolation : std::runtime_error {
  std::string term;
  std::size_t row, col;
  double value;
  StochasticityViolation(const std::string& term, std::size_t r, std::size_t c, double v);
};

struct GeneratorReport {
  double maxColumnSum = 0.0;
  double minOffDiagonal = 0.0;
  bool stochastic = false;
};

struct Generator {
  CsrMatrix A;
  int N = 0;
  int localDim = 4;
  GeneratorReport report;

  std::size_t dim() const { return A.n; }
  RMatrix dense(std::size_t cap = 4096) const;
  CMatrix cdense(std::size_t cap = 4096) const { return dense(cap).cast<cplx>(); }
  RVector apply(const RVector& v) const;
};

GeneratorReport inspect_generator(const CsrMatrix& A);

// Local pieces of a generator: bulk acts on (k, k+1); wrap on (N, 1) with
// its first leg on site N (empty for open); left/right act on sites 1 and N.
struct LocalTerms {
  CMatrix bulk, wrap, left, right;
};
LocalTerms local_generator(const GeneratorSpec& spec);
LocalTerms lane_local_generator(const GeneratorSpec& spec, Lane lane);

// Diagonal of the coth-rate bulk matrix exactly as printed (entries 6 and 9
// differ from the column-sum-consistent values).
std::vector<double> printed_rawm_diagonal(double eta1, double eta2);

Generator build_generator(const GeneratorSpec& spec);
std::pair<Generator, Generator> lane_generators(const GeneratorSpec& spec);

// Pi^T (wS * Ms (x) I + wT * I (x) Mt) Pi in the site basis.
CsrMatrix lane_kronecker_sum(const CsrMatrix& Ms, const CsrMatrix& Mt, int N, double wS = 1.0,
                             double wT = 1.0);

enum class Charge { Q1, Q2 };
struct ChargeOperator {
  Charge which = Charge::Q1;
  int N = 0;
  std::vector<int> diag;
};
// Q1 = n(+2) + n(+1), Q2 = n(+2) + n(-1).
ChargeOperator charge_operator(Charge which, int N);
// max |[Q, M]| entrywise
double commutator_norm(const ChargeOperator& Q, const CsrMatrix& M);

// Species labels -2, -1, +1, +2 <-> local index 0..3.
int species_index(int label);
int species_label(int index);

}  // namespace d2stoch
