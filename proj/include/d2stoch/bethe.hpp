#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "d2stoch/algebra.hpp"
#include "d2stoch/lintensor.hpp"

namespace d2stoch {

enum class BetheCase { PeriodicSym, TwistedSym, OpenSym, PeriodicAsym, OpenAsym };

struct TQCase {
  BetheCase tag = BetheCase::PeriodicSym;
  int N = 4;
  int branch = +1;               // OpenSym: +1 or -1
  double w1 = 0.0, w2 = 0.0;     // OpenSym: left and right rate sums of the lane
  double eta = 0.0;              // asymmetric lane deformation
  std::array<double, 4> rates{};  // OpenAsym lane rates (left1, left2, right1, right2)
  bool printedG = false;         // OpenAsym steady branch: use g exactly as printed

  static TQCase periodic_sym(int N);
  static TQCase twisted_sym(int N);
  static TQCase open_sym(int N, const BoundaryRates& r, Lane lane, int branch);
  static TQCase periodic_asym(int N, double eta);
  static TQCase open_asym(int N, double eta, const BoundaryRates& r, Lane lane);

  bool symmetric() const;
  std::string name() const;
};

struct RootSet {
  std::vector<cplx> finite;
  int infCount = 0;
  TQCase sector;
  bool singular = false;      // the pair {-1, 0}
  bool steadyBranch = false;  // OpenAsym: the g-function T-Q relation
  double residual = 0.0;

  int M() const { return static_cast<int>(finite.size()) + infCount; }
};

struct SingularPairError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct QZeroError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool is_singular_pair(const std::vector<cplx>& roots, double tol = 1e-8);

cplx tq_lambda(const RootSet& rs, cplx u);
// Per-root log residual log(lhs/rhs) (OpenAsym: (a+b)/(|a|+|b|)).
std::vector<cplx> bae_residuals(const RootSet& rs);
double bae_residual(const RootSet& rs);
cplx energy(const RootSet& rs);

// OpenAsym helpers, exposed for checks against the transfer matrix.
cplx open_asym_f(const TQCase& c, cplx u);
cplx open_asym_g(const TQCase& c, cplx u);

struct SolveOptions {
  int seedsPerRoot = 64;
  double tol = 1e-12;
  std::uint64_t seed = 20240601;
  int threads = 0;  // 0: D2STOCH_THREADS or hardware concurrency
  std::vector<std::vector<cplx>> warmStarts;
};

struct SolveStats {
  int starts = 0;
  int converged = 0;
  int admissible = 0;
  int rounds = 1;     // seed escalations used by solve_lane
  int expected = -1;  // sector count from the state-counting argument
  int found = 0;
};

// Newton multistart for sets of M finite roots; returns distinct admissible sets.
std::vector<RootSet> solve_bae(const TQCase& c, int M, const SolveOptions& opt,
                               SolveStats* stats = nullptr);
// Newton from the given roots; residual filled in. Returns false if it fails.
bool polish(RootSet& rs, double tol = 1e-12);

// Canonical representative of each root (OpenSym: mu ~ -mu-1; asymmetric: mod i pi,
// OpenAsym also mu ~ -mu-eta), sorted by (re, im).
std::vector<cplx> canonical_roots(const TQCase& c, const std::vector<cplx>& roots);
bool same_roots(const TQCase& c, const std::vector<cplx>& a, const std::vector<cplx>& b,
                double radius = 1e-6);

int resolved_threads(int hint);

struct Candidate {
  RootSet roots;
  cplx energy{0.0};
  int multiplicity = 1;
  std::string label;
};

struct LaneSolution {
  TQCase tq;
  std::vector<RootSet> sets;  // one per distinct Bethe state family
  std::vector<Candidate> candidates;
  std::map<int, SolveStats> stats;  // per sector
};

// All sectors of one lane. Sym cases add table warm starts when available.
LaneSolution solve_lane(const TQCase& c, const SolveOptions& opt, bool tableWarmStarts = true);

// Descendants of a periodic symmetric highest-weight set: infCount = 1..N-2M.
std::vector<RootSet> with_descendants(const RootSet& hw);

struct MatchRow {
  cplx ed{0.0};
  cplx bethe{0.0};
  double residual = 0.0;
  std::string label;
  bool singular = false;
};

struct SpectrumReconciliation {
  std::vector<MatchRow> rows;
  int unmatchedED = 0;
  int unmatchedBethe = 0;
  int singularAssigned = 0;
  double maxResidual = 0.0;
  bool complete(double tol) const {
    return unmatchedED == 0 && unmatchedBethe == 0 && maxResidual <= tol;
  }
};

// Greedy matching over sorted pair distances; singular candidates take leftover ED values.
SpectrumReconciliation reconcile(const std::vector<cplx>& ed, const std::vector<Candidate>& cands);
// Kronecker-sum spectrum: candidates (a, b) -> a.energy + b.energy.
std::vector<Candidate> combine_lanes(const std::vector<Candidate>& a, const std::vector<Candidate>& b);

// Printed root tables.
struct TableRow {
  std::vector<cplx> finite;
  int infCount = 0;
};
const std::vector<TableRow>& table1();  // periodic, N = 4
const std::vector<TableRow>& table2();  // twisted, N = 4
const std::vector<TableRow>& table3(Lane lane, int branch);  // open, N = 3
// Root-by-root agreement to 4 decimals (half a unit in the 4th place), up to equivalences.
bool row_matches(const TQCase& c, const TableRow& row, const RootSet& rs, double tol = 5.0001e-5);

}  // namespace d2stoch
