#include "d2stoch/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <Eigen/SparseLU>

#include "d2stoch/bethe.hpp"

namespace d2stoch {

namespace {

double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

int infer_N(std::size_t dim) {
  int N = 0;
  std::size_t d = 1;
  while (d < dim) {
    d *= 4;
    ++N;
  }
  if (d != dim) throw DimensionError("state dimension is not a power of 4");
  return N;
}

// Digits of a basis index, site 1 first.
std::vector<int> digits_of(std::size_t index, int N) {
  std::vector<int> d(N);
  for (int s = N - 1; s >= 0; --s) {
    d[s] = static_cast<int>(index & 3u);
    index >>= 2;
  }
  return d;
}

bool occupied(std::size_t index, int N, const std::vector<int>& sites, const std::vector<int>& species) {
  for (std::size_t q = 0; q < sites.size(); ++q) {
    const int shift = 2 * (N - sites[q]);
    if (static_cast<int>((index >> shift) & 3u) != species_index(species[q])) return false;
  }
  return true;
}

void check_sites(const std::vector<int>& sites, const std::vector<int>& species, int N) {
  if (sites.size() != species.size()) throw std::invalid_argument("sites and species differ in length");
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (sites[i] < 1 || sites[i] > N) throw std::invalid_argument("site out of range");
    for (std::size_t j = 0; j < i; ++j)
      if (sites[i] == sites[j]) throw std::invalid_argument("site collision: sites must be distinct");
  }
}

}  // namespace

// ---------------------------------------------------------------- probability vectors

RVector basis_state(const std::vector<int>& labels) {
  const int N = static_cast<int>(labels.size());
  std::size_t idx = 0;
  for (int l : labels) idx = idx * 4 + static_cast<std::size_t>(species_index(l));
  RVector v = RVector::Zero(static_cast<Eigen::Index>(std::size_t{1} << (2 * N)));
  v(static_cast<Eigen::Index>(idx)) = 1.0;
  return v;
}

RVector product_state(const std::vector<std::array<double, 4>>& factors) {
  RVector v = RVector::Ones(1);
  for (const auto& f : factors) {
    RVector next(v.size() * 4);
    for (Eigen::Index i = 0; i < v.size(); ++i)
      for (int j = 0; j < 4; ++j) next(4 * i + j) = v(i) * f[j];
    v = std::move(next);
  }
  return v;
}

bool is_probability(const RVector& v, double tol) {
  return std::abs(v.sum() - 1.0) <= tol && v.minCoeff() >= -1e-12;
}

std::vector<int> parse_labels(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok.erase(std::remove_if(tok.begin(), tok.end(), [](unsigned char ch) { return std::isspace(ch); }),
              tok.end());
    if (tok.empty()) throw std::invalid_argument("empty species label");
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad species label '" + tok + "'");
    }
    if (used != tok.size() || (v != -2 && v != -1 && v != 1 && v != 2))
      throw std::invalid_argument("bad species label '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("no species labels");
  return out;
}

// ---------------------------------------------------------------- evolution

double EvolutionTrace::coefficient(std::size_t ti, const std::vector<int>& labels) const {
  std::size_t idx = 0;
  for (int l : labels) idx = idx * 4 + static_cast<std::size_t>(species_index(l));
  return states.at(ti)(static_cast<Eigen::Index>(idx));
}

std::vector<double> EvolutionTrace::series(const std::vector<int>& labels) const {
  std::vector<double> out;
  for (std::size_t i = 0; i < times.size(); ++i) out.push_back(coefficient(i, labels));
  return out;
}

EvolutionTrace evolve(const Generator& G, const RVector& initial, const std::vector<double>& times,
                      double tol) {
  if (static_cast<std::size_t>(initial.size()) != G.dim())
    throw DimensionError("evolve: initial state dimension mismatch");
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] < 0 || (i > 0 && times[i] < times[i - 1]))
      throw std::invalid_argument("evolve: times must be sorted and nonnegative");
  EvolutionTrace tr;
  tr.N = G.N;
  tr.times = times;
  RVector v = initial;
  double t = 0.0;
  for (double ti : times) {
    if (ti > t) v = expm_action(G.A, v, ti - t, tol);
    t = ti;
    tr.states.push_back(v);
  }
  return tr;
}

std::vector<EvolutionTrace> evolve_many(const Generator& G, const std::vector<RVector>& initials,
                                        const std::vector<double>& times, double tol) {
  std::vector<EvolutionTrace> out(initials.size());
  const int T = std::max(1, std::min<int>(resolved_threads(0), static_cast<int>(initials.size())));
  std::vector<std::thread> pool;
  auto work = [&](int t) {
    for (std::size_t i = t; i < initials.size(); i += T) out[i] = evolve(G, initials[i], times, tol);
  };
  for (int t = 1; t < T; ++t) pool.emplace_back(work, t);
  work(0);
  for (auto& th : pool) th.join();
  return out;
}

// ---------------------------------------------------------------- steady states

namespace {

// Local factors v_k over (-2, -1, +1, +2), k = 1..4.
constexpr double kTwistSigns[4][4] = {
    {1, 1, 1, 1}, {1, -1, 1, -1}, {1, 1, -1, -1}, {1, -1, -1, 1}};

RVector twisted_member(int k, int N) {
  std::vector<std::array<double, 4>> f(N);
  for (auto& a : f)
    for (int j = 0; j < 4; ++j) a[j] = kTwistSigns[k][j] / 4.0;
  return product_state(f);
}

void normalize_member(RVector& v) {
  const double s = v.sum();
  if (std::abs(s) > 1e-12 * v.cwiseAbs().sum())
    v /= s;
  else
    v /= v.norm();
}

}  // namespace

SteadyStateFamily steady_states(const GeneratorSpec& spec, bool normalize) {
  spec.validate();
  SteadyStateFamily fam;
  fam.boundary = spec.boundary;
  fam.N = spec.N;
  const int N = spec.N;
  const std::size_t dim = std::size_t{1} << (2 * N);
  if (spec.symmetry != Symmetry::Symmetric)
    throw std::invalid_argument("steady_states: symmetric generators only");
  switch (spec.boundary) {
    case Boundary::Periodic:
      for (int m = 0; m <= N; ++m)
        for (int n = 0; n <= N; ++n) {
          RVector v = RVector::Zero(static_cast<Eigen::Index>(dim));
          const double amp = 1.0 / (binom(N, m) * binom(N, n));
          for (std::size_t i = 0; i < dim; ++i) {
            int q1 = 0, q2 = 0;
            for (int d : digits_of(i, N)) {
              q1 += d >> 1;
              q2 += d & 1;
            }
            if (q1 == m && q2 == n) v(static_cast<Eigen::Index>(i)) = amp;
          }
          if (normalize) normalize_member(v);
          fam.members.push_back(v);
          fam.labels.push_back("(" + std::to_string(m) + "," + std::to_string(n) + ")");
        }
      break;
    case Boundary::Twisted:
      for (int k = 0; k < 4; ++k) {
        RVector v = twisted_member(k, N);
        if (normalize) normalize_member(v);
        fam.members.push_back(v);
        fam.labels.push_back("Psi" + std::to_string(k + 1));
      }
      break;
    case Boundary::Open: {
      // unique kernel vector: M v = 0 with row 0 replaced by the normalization 1^T v = 1
      const Generator G = build_generator(spec);
      std::vector<Eigen::Triplet<double>> trips;
      trips.reserve(G.A.nnz() + dim);
      for (std::size_t r = 1; r < dim; ++r)
        for (auto k = G.A.rowptr[r]; k < G.A.rowptr[r + 1]; ++k)
          trips.emplace_back(static_cast<int>(r), G.A.col[static_cast<std::size_t>(k)],
                             G.A.val[static_cast<std::size_t>(k)]);
      for (std::size_t c = 0; c < dim; ++c) trips.emplace_back(0, static_cast<int>(c), 1.0);
      Eigen::SparseMatrix<double> B(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
      B.setFromTriplets(trips.begin(), trips.end());
      B.makeCompressed();
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
      lu.compute(B);
      if (lu.info() != Eigen::Success)
        throw std::runtime_error("steady_states: open kernel is not one-dimensional");
      RVector rhs = RVector::Zero(static_cast<Eigen::Index>(dim));
      rhs(0) = 1.0;
      RVector v = lu.solve(rhs);
      if (lu.info() != Eigen::Success || !v.allFinite())
        throw std::runtime_error("steady_states: open kernel solve failed");
      const double nM = std::max(G.A.norm1(), 1e-300);
      if (G.apply(v).norm() > 1e-9 * nM * v.norm())
        throw std::runtime_error("steady_states: open kernel is not one-dimensional");
      fam.members.push_back(v);
      fam.labels.push_back("open");
      fam.left = RVector::Ones(static_cast<Eigen::Index>(dim));
      break;
    }
  }
  return fam;
}

double steady_residual(const Generator& G, const SteadyStateFamily& fam) {
  const double nM = std::max(G.A.norm1(), 1e-300);
  double worst = 0.0;
  for (const auto& v : fam.members) worst = std::max(worst, G.apply(v).norm() / (nM * v.norm()));
  return worst;
}

double span_overlap(const RVector& v, const CMatrix& basis) {
  const CVector cv = v.cast<cplx>();
  const Eigen::HouseholderQR<CMatrix> qr(basis);
  const CMatrix Q = qr.householderQ() * CMatrix::Identity(basis.rows(), basis.cols());
  return (Q.adjoint() * cv).norm() / cv.norm();
}

// ---------------------------------------------------------------- twisted

std::array<double, 4> twisted_projection(const RVector& initial, int N) {
  std::array<double, 4> c{};
  for (int k = 0; k < 4; ++k) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < initial.size(); ++i) {
      if (initial(i) == 0.0) continue;
      double sign = 1.0;
      for (int d : digits_of(static_cast<std::size_t>(i), N)) sign *= kTwistSigns[k][d];
      s += sign * initial(i);
    }
    c[k] = s;
  }
  return c;
}

RVector twisted_limit(const std::array<double, 4>& c, int N) {
  RVector v = RVector::Zero(static_cast<Eigen::Index>(std::size_t{1} << (2 * N)));
  for (int k = 0; k < 4; ++k) v += c[k] * twisted_member(k, N);
  return v;
}

double quadratic_correlator(const RVector& psi, const std::vector<int>& sites,
                            const std::vector<int>& species) {
  const int N = infer_N(static_cast<std::size_t>(psi.size()));
  check_sites(sites, species, N);
  double num = 0.0;
  for (Eigen::Index i = 0; i < psi.size(); ++i)
    if (occupied(static_cast<std::size_t>(i), N, sites, species)) num += psi(i) * psi(i);
  return num / psi.squaredNorm();
}

// ---------------------------------------------------------------- correlations

double correlations_periodic(int m, int n, int N, const std::vector<int>& sites,
                             const std::vector<int>& species) {
  if (m < 0 || m > N || n < 0 || n > N) throw std::invalid_argument("m, n must lie in [0, N]");
  check_sites(sites, species, N);
  const int k = static_cast<int>(sites.size());
  int downS = 0, downT = 0;
  for (int s : species) {
    const int j = species_index(s);
    downS += j >> 1;
    downT += j & 1;
  }
  // a uniform lane state with m down spins: fraction of configurations fixing k sites
  return binom(N - k, m - downS) / binom(N, m) * (binom(N - k, n - downT) / binom(N, n));
}

double linear_correlator(const RVector& psi, const std::vector<int>& sites,
                         const std::vector<int>& species) {
  const int N = infer_N(static_cast<std::size_t>(psi.size()));
  check_sites(sites, species, N);
  double num = 0.0;
  for (Eigen::Index i = 0; i < psi.size(); ++i)
    if (occupied(static_cast<std::size_t>(i), N, sites, species)) num += psi(i);
  return num / psi.sum();
}

double lane_profile_open(const BoundaryRates& r, Lane lane, int N, int k) {
  if (k < 1 || k > N) throw std::invalid_argument("site out of range");
  const auto l = r.lane(lane);
  const double w1 = l[0] + l[1], w2 = l[2] + l[3];
  if (w1 == 0.0 || w2 == 0.0) throw std::domain_error("lane_profile_open: vanishing rate sum");
  const double ra = l[0] / w1, rb = l[2] / w2;
  const double den = N + 1.0 / w1 - 1.0 / w2 - 1.0;
  if (den == 0.0) throw std::domain_error("lane_profile_open: vanishing denominator");
  return (ra * (N - k - 1.0 / w2) + rb * (k - 1 + 1.0 / w1)) / den;
}

double density_profile_open(const BoundaryRates& r, int N, int k, int species) {
  const double ps = lane_profile_open(r, Lane::Sigma, N, k);
  const double pt = lane_profile_open(r, Lane::Tau, N, k);
  const int j = species_index(species);
  return ((j >> 1) ? ps : 1.0 - ps) * ((j & 1) ? pt : 1.0 - pt);
}

// ---------------------------------------------------------------- short times

std::vector<double> short_time_grid() {
  std::vector<double> t(8);
  const double a = std::log(1e-3), b = std::log(5e-2);
  for (int i = 0; i < 8; ++i) t[i] = std::exp(a + (b - a) * i / 7.0);
  return t;
}

ShortTimeFit short_time_order(const Generator& G, const RVector& initial,
                              const std::vector<int>& target, const std::vector<double>& tGrid) {
  if (tGrid.size() < 5) throw std::invalid_argument("short_time_order: need at least 5 times");
  for (double t : tGrid)
    if (!(t > 0.0 && t <= 0.1)) throw std::invalid_argument("short_time_order: times must lie in (0, 0.1]");
  auto grid = tGrid;
  std::sort(grid.begin(), grid.end());
  const auto tr = evolve(G, initial, grid, 1e-14);
  ShortTimeFit fit;
  fit.t = grid;
  fit.c = tr.series(target);
  if (*std::max_element(fit.c.begin(), fit.c.end()) < 1e-14)
    throw std::domain_error("short_time_order: target configuration unreachable on the grid");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = std::log(grid[i]), y = std::log(std::max(fit.c[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

// ---------------------------------------------------------------- Bethe states

CVector bethe_state(const TransferSpec& laneSpec, const std::vector<cplx>& roots, StateSide side) {
  if (laneSpec.lane == LaneSel::Full) throw std::invalid_argument("bethe_state: lane spec required");
  laneSpec.validate();
  const int N = laneSpec.N;
  auto reference = [&](double a, double b) {
    std::vector<CMatrix> f(N, CMatrix(2, 1));
    for (auto& x : f) {
      x(0, 0) = a;
      x(1, 0) = b;
    }
    return CVector(kron_all(f).col(0));
  };
  std::function<CMatrix(cplx)> op;
  CVector v;
  switch (laneSpec.construction) {
    case Construction::PeriodicSym:
      if (side == StateSide::Ket) {
        v = reference(1, 0);
        op = [&](cplx u) { return aux_block(monodromy(laneSpec, u), 2, 0, 1); };
      } else {
        v = reference(1, 0);
        op = [&](cplx u) { return CMatrix(aux_block(monodromy(laneSpec, u), 2, 1, 0).transpose()); };
      }
      break;
    case Construction::TwistedSym:
      v = reference(1, 1);
      op = [&, side](cplx u) {
        const CMatrix T = monodromy(laneSpec, u);
        const CMatrix A = aux_block(T, 2, 0, 0), B = aux_block(T, 2, 0, 1);
        const CMatrix C = aux_block(T, 2, 1, 0), D = aux_block(T, 2, 1, 1);
        if (side == StateSide::Ket) return CMatrix(A - B + C - D);
        return CMatrix((A + B - C - D).transpose());
      };
      break;
    case Construction::OpenSym: {
      const auto l = laneSpec.rates.lane(laneSpec.lane == LaneSel::Sigma ? Lane::Sigma : Lane::Tau);
      const double r1 = l[2], r2 = l[3];
      v = side == StateSide::Ket ? reference(1, -1) : reference(1, 1);
      op = [&, r1, r2, side](cplx u) {
        const CMatrix T = double_row_monodromy(laneSpec, u);
        const CMatrix Bt = aux_block(T, 2, 0, 0) * (r1 * r2) + aux_block(T, 2, 0, 1) * (r1 * r1) -
                           aux_block(T, 2, 1, 0) * (r2 * r2) - aux_block(T, 2, 1, 1) * (r1 * r2);
        return side == StateSide::Ket ? Bt : CMatrix(Bt.transpose());
      };
      break;
    }
    default: throw std::invalid_argument("bethe_state: symmetric constructions only");
  }
  // ket: B(mu_1) ... B(mu_M) |ref>, rightmost first; bra: <ref| B(mu_1) ... B(mu_M), leftmost first
  if (side == StateSide::Ket)
    for (auto it = roots.rbegin(); it != roots.rend(); ++it) v = op(*it) * v;
  else
    for (cplx mu : roots) v = op(mu) * v;
  if (v.norm() < 1e-12 * std::pow(1.0 + std::abs(roots.empty() ? 0.0 : roots[0]), 2 * N))
    throw std::runtime_error("bethe_state: null vector (invalid roots or annihilated reference)");
  return v;
}

double eigenvector_residual(const CMatrix& t, const CVector& v) {
  const CVector tv = t * v;
  const cplx lambda = v.dot(tv) / v.squaredNorm();
  const double nt = std::max(t.norm(), 1e-300);
  return (tv - lambda * v).norm() / (nt * v.norm());
}

}  // namespace d2stoch
