#include "d2stoch/bethe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <locale>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

namespace d2stoch {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cplx kI{0.0, 1.0};

cplx wrap(cplx z) { return {z.real(), std::remainder(z.imag(), 2.0 * kPi)}; }

std::string fmt_root(cplx z) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.setf(std::ios::fixed);
  os.precision(4);
  // values that round to zero print without a sign
  auto snap = [](double x) { return std::abs(x) < 5e-5 ? 0.0 : x; };
  const double re = snap(z.real()), im = snap(z.imag());
  os << re << (im < 0 ? "-" : "+") << std::abs(im) << "i";
  return os.str();
}

std::string label_of(const RootSet& rs) {
  std::ostringstream os;
  if (rs.steadyBranch) return "steady branch";
  os << "{";
  for (std::size_t i = 0; i < rs.finite.size(); ++i) os << (i ? ", " : "") << fmt_root(rs.finite[i]);
  for (int i = 0; i < rs.infCount; ++i) os << (rs.finite.empty() && i == 0 ? "" : ", ") << "inf";
  os << "}";
  if (rs.singular) os << " singular";
  return os.str();
}

}  // namespace

TQCase TQCase::periodic_sym(int N) {
  TQCase c;
  c.tag = BetheCase::PeriodicSym;
  c.N = N;
  return c;
}

TQCase TQCase::twisted_sym(int N) {
  TQCase c;
  c.tag = BetheCase::TwistedSym;
  c.N = N;
  return c;
}

TQCase TQCase::open_sym(int N, const BoundaryRates& r, Lane lane, int branch) {
  TQCase c;
  c.tag = BetheCase::OpenSym;
  c.N = N;
  c.branch = branch >= 0 ? 1 : -1;
  const auto l = r.lane(lane);
  c.rates = l;
  c.w1 = l[0] + l[1];
  c.w2 = l[2] + l[3];
  return c;
}

TQCase TQCase::periodic_asym(int N, double eta) {
  TQCase c;
  c.tag = BetheCase::PeriodicAsym;
  c.N = N;
  c.eta = eta;
  return c;
}

TQCase TQCase::open_asym(int N, double eta, const BoundaryRates& r, Lane lane) {
  TQCase c;
  c.tag = BetheCase::OpenAsym;
  c.N = N;
  c.eta = eta;
  c.rates = r.lane(lane);
  return c;
}

bool TQCase::symmetric() const {
  return tag == BetheCase::PeriodicSym || tag == BetheCase::TwistedSym || tag == BetheCase::OpenSym;
}

std::string TQCase::name() const {
  std::ostringstream os;
  switch (tag) {
    case BetheCase::PeriodicSym: os << "periodic-sym"; break;
    case BetheCase::TwistedSym: os << "twisted-sym"; break;
    case BetheCase::OpenSym: os << "open-sym(" << (branch > 0 ? "+" : "-") << ")"; break;
    case BetheCase::PeriodicAsym: os << "periodic-asym(eta=" << eta << ")"; break;
    case BetheCase::OpenAsym: os << "open-asym(eta=" << eta << ")"; break;
  }
  os << " N=" << N;
  return os.str();
}

bool is_singular_pair(const std::vector<cplx>& roots, double tol) {
  if (roots.size() != 2) return false;
  auto hit = [&](cplx a, cplx b) { return std::abs(a + 1.0) < tol && std::abs(b) < tol; };
  return hit(roots[0], roots[1]) || hit(roots[1], roots[0]);
}

// ---------------------------------------------------------------- open asym functions

namespace {

struct AsymBoundary {
  cplx left, right;
};

AsymBoundary f_factors(const TQCase& c, cplx u) {
  const double s1 = c.rates[0], s2 = c.rates[1], s1p = c.rates[2], s2p = c.rates[3];
  const cplx sh = std::sinh(u), se = std::sinh(cplx(c.eta));
  return {-se + s1 * std::exp(-u) * sh + s2 * std::exp(u) * sh,
          -se - s2p * std::exp(-u) * sh - s1p * std::exp(u) * sh};
}

AsymBoundary g_factors(const TQCase& c, cplx u) {
  const double s1 = c.rates[0], s2 = c.rates[1], s1p = c.rates[2], s2p = c.rates[3];
  const cplx sh = std::sinh(u), se = std::sinh(cplx(c.eta));
  if (c.printedG)
    return {-se - s1 * std::exp(-u) * sh - s2 * std::exp(u) * sh,
            -se + s2p * std::exp(-u) * sh + s1p * std::exp(u) * sh};
  return {-se - (s1 * std::exp(u) + s2 * std::exp(-u)) * sh,
          -se + (s2p * std::exp(u) + s1p * std::exp(-u)) * sh};
}

cplx asym_prefactor(const TQCase& c, cplx u) {
  const cplx e = c.eta;
  return std::sinh(2.0 * u + 2.0 * e) / std::sinh(2.0 * u + e) *
         std::pow(std::sinh(u + e), 2 * c.N);
}

cplx log_f(const TQCase& c, cplx u) {
  const cplx e = c.eta;
  const auto b = f_factors(c, u);
  return std::log(std::sinh(2.0 * u + 2.0 * e)) - std::log(std::sinh(2.0 * u + e)) +
         std::log(b.left) + std::log(b.right) + 2.0 * c.N * std::log(std::sinh(u + e));
}

}  // namespace

cplx open_asym_f(const TQCase& c, cplx u) {
  const auto b = f_factors(c, u);
  return asym_prefactor(c, u) * b.left * b.right;
}

cplx open_asym_g(const TQCase& c, cplx u) {
  const auto b = g_factors(c, u);
  return asym_prefactor(c, u) * b.left * b.right;
}

// ---------------------------------------------------------------- T-Q relation

namespace {

void check_q_zero(const std::vector<cplx>& roots, cplx u, const std::function<cplx(cplx, cplx)>& factor) {
  for (cplx m : roots)
    if (std::abs(factor(u, m)) < 1e-13 * std::max(1.0, std::abs(m)))
      throw QZeroError("tq_lambda: evaluation at a zero of Q");
}

}  // namespace

cplx tq_lambda(const RootSet& rs, cplx u) {
  const TQCase& c = rs.sector;
  const auto& mu = rs.finite;
  const int N = c.N;
  switch (c.tag) {
    case BetheCase::PeriodicSym:
    case BetheCase::TwistedSym: {
      check_q_zero(mu, u, [](cplx x, cplx m) { return x - m; });
      cplx down = 1.0, up = 1.0;
      for (cplx m : mu) {
        down *= (u - 1.0 - m) / (u - m);
        up *= (u + 1.0 - m) / (u - m);
      }
      const cplx a = std::pow(u + 1.0, N) * down, b = std::pow(u, N) * up;
      return c.tag == BetheCase::PeriodicSym ? a + b : a - b;
    }
    case BetheCase::OpenSym: {
      auto Qf = [&](cplx x) {
        cplx q = 1.0;
        for (cplx m : mu) q *= (x - m) * (x + m + 1.0);
        return q;
      };
      check_q_zero(mu, u, [](cplx x, cplx m) { return (x - m) * (x + m + 1.0); });
      const double b = c.branch, w1 = c.w1, w2 = c.w2;
      const cplx q0 = Qf(u);
      return (2.0 * u + 2.0) / (2.0 * u + 1.0) * (1.0 + b * w1 * u) * (1.0 - b * w2 * u) *
                 std::pow(u + 1.0, 2 * N) * Qf(u - 1.0) / q0 +
             2.0 * u / (2.0 * u + 1.0) * (1.0 - b * w1 * (u + 1.0)) * (1.0 + b * w2 * (u + 1.0)) *
                 std::pow(u, 2 * N) * Qf(u + 1.0) / q0;
    }
    case BetheCase::PeriodicAsym: {
      const cplx e = c.eta;
      check_q_zero(mu, u, [](cplx x, cplx m) { return std::sinh(x - m); });
      cplx down = 1.0, up = 1.0;
      for (cplx m : mu) {
        down *= std::sinh(u - e - m) / std::sinh(u - m);
        up *= std::sinh(u + e - m) / std::sinh(u - m);
      }
      // a root at +infinity contributes e^{eta} and e^{-eta} to the two ratios
      const double inf = rs.infCount;
      const double m = rs.M();
      return std::exp(-m * e) * std::pow(std::sinh(u + e), N) * down * std::exp(inf * e) +
             std::exp((N - m) * e) * std::pow(std::sinh(u), N) * up * std::exp(-inf * e);
    }
    case BetheCase::OpenAsym: {
      const cplx e = c.eta;
      if (rs.steadyBranch) return open_asym_g(c, u) + open_asym_g(c, -u - e);
      auto Qf = [&](cplx x) {
        cplx q = 1.0;
        for (cplx m : mu) q *= std::sinh(x - m) * std::sinh(x + m + e);
        return q;
      };
      check_q_zero(mu, u, [e](cplx x, cplx m) { return std::sinh(x - m) * std::sinh(x + m + e); });
      const cplx q0 = Qf(u);
      return open_asym_f(c, u) * Qf(u - e) / q0 + open_asym_f(c, -u - e) * Qf(u + e) / q0;
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------- BAE residuals

namespace {

// log(lhs/rhs) for root k, before wrapping.
cplx log_ratio(const TQCase& c, const std::vector<cplx>& mu, int inf, std::size_t k) {
  const cplx x = mu[k];
  const int N = c.N;
  cplx s = 0.0;
  switch (c.tag) {
    case BetheCase::PeriodicSym:
    case BetheCase::TwistedSym:
      s = double(N) * (std::log(x + 1.0) - std::log(x));
      for (std::size_t l = 0; l < mu.size(); ++l)
        if (l != k) s -= std::log(x - mu[l] + 1.0) - std::log(x - mu[l] - 1.0);
      if (c.tag == BetheCase::TwistedSym) s -= kI * kPi;
      break;
    case BetheCase::OpenSym: {
      const double b = c.branch;
      s = std::log(1.0 - b * c.w1 * (x + 1.0)) + std::log(1.0 + b * c.w2 * (x + 1.0)) -
          std::log(1.0 + b * c.w1 * x) - std::log(1.0 - b * c.w2 * x) +
          2.0 * N * (std::log(x) - std::log(x + 1.0));
      for (std::size_t l = 0; l < mu.size(); ++l)
        if (l != k)
          s -= std::log(x - mu[l] - 1.0) + std::log(x + mu[l]) - std::log(x - mu[l] + 1.0) -
               std::log(x + mu[l] + 2.0);
      break;
    }
    case BetheCase::PeriodicAsym: {
      const cplx e = c.eta;
      s = -double(N) * e + double(N) * (std::log(std::sinh(x + e)) - std::log(std::sinh(x))) +
          2.0 * double(inf) * e;
      for (std::size_t l = 0; l < mu.size(); ++l)
        if (l != k) s -= std::log(std::sinh(x - mu[l] + e)) - std::log(std::sinh(x - mu[l] - e));
      break;
    }
    case BetheCase::OpenAsym: {
      const cplx e = c.eta;
      // -a/b with a = f(x) Q(x - eta), b = f(-x - eta) Q(x + eta)
      s = kI * kPi + log_f(c, x) - log_f(c, -x - e);
      for (cplx m : mu)
        s += std::log(std::sinh(x - e - m)) + std::log(std::sinh(x + m)) -
             std::log(std::sinh(x + e - m)) - std::log(std::sinh(x + m + 2.0 * e));
      break;
    }
  }
  return s;
}

std::vector<cplx> log_residuals(const TQCase& c, const std::vector<cplx>& mu, int inf) {
  std::vector<cplx> F(mu.size());
  for (std::size_t k = 0; k < mu.size(); ++k) F[k] = wrap(log_ratio(c, mu, inf, k));
  return F;
}

double inf_norm(const std::vector<cplx>& F) {
  double m = 0.0;
  for (cplx f : F) {
    if (!std::isfinite(f.real()) || !std::isfinite(f.imag())) return INFINITY;
    m = std::max(m, std::abs(f));
  }
  return m;
}

}  // namespace

std::vector<cplx> bae_residuals(const RootSet& rs) {
  if (rs.singular || (rs.sector.symmetric() && rs.sector.tag != BetheCase::OpenSym &&
                      is_singular_pair(rs.finite)))
    throw SingularPairError("bae_residual: singular pair {-1, 0} has no residual");
  if (rs.steadyBranch) return {};
  const TQCase& c = rs.sector;
  if (c.tag != BetheCase::OpenAsym) return log_residuals(c, rs.finite, rs.infCount);
  const cplx e = c.eta;
  std::vector<cplx> out;
  for (cplx x : rs.finite) {
    cplx qm = 1.0, qp = 1.0;
    for (cplx m : rs.finite) {
      qm *= std::sinh(x - e - m) * std::sinh(x + m);
      qp *= std::sinh(x + e - m) * std::sinh(x + m + 2.0 * e);
    }
    const cplx a = open_asym_f(c, x) * qm, b = open_asym_f(c, -x - e) * qp;
    out.push_back((a + b) / (std::abs(a) + std::abs(b)));
  }
  return out;
}

double bae_residual(const RootSet& rs) { return inf_norm(bae_residuals(rs)); }

// ---------------------------------------------------------------- energy

cplx energy(const RootSet& rs) {
  const TQCase& c = rs.sector;
  if (rs.singular || (c.tag != BetheCase::OpenSym && c.symmetric() && is_singular_pair(rs.finite)))
    throw SingularPairError("energy: singular pair {-1, 0} is not regularized");
  cplx E = 0.0;
  switch (c.tag) {
    case BetheCase::PeriodicSym:
    case BetheCase::TwistedSym:
      for (cplx m : rs.finite) E += 1.0 / (m * (m + 1.0));
      return E;
    case BetheCase::OpenSym:
      for (cplx m : rs.finite) E += 1.0 / (m * (m + 1.0));
      return E + 0.5 * c.branch * (c.w1 - c.w2) - 0.5 * c.w1 + 0.5 * c.w2;
    case BetheCase::PeriodicAsym:
    case BetheCase::OpenAsym: {
      if (rs.steadyBranch) return 0.0;
      const cplx e = c.eta, se = std::sinh(e);
      for (cplx m : rs.finite) E += se * se / (std::sinh(m) * std::sinh(m + e));
      if (c.tag == BetheCase::OpenAsym)
        E += -(c.rates[0] + c.rates[1]) + (c.rates[2] + c.rates[3]);
      return E;
    }
  }
  return E;
}

// ---------------------------------------------------------------- root identity

namespace {

double root_distance(const TQCase& c, cplx a, cplx b) {
  switch (c.tag) {
    case BetheCase::PeriodicSym:
    case BetheCase::TwistedSym: return std::abs(a - b);
    case BetheCase::OpenSym: return std::min(std::abs(a - b), std::abs(a + b + 1.0));
    case BetheCase::PeriodicAsym:
    case BetheCase::OpenAsym: {
      double d = INFINITY;
      for (int k = -1; k <= 1; ++k) {
        d = std::min(d, std::abs(a - b - double(k) * kPi * kI));
        if (c.tag == BetheCase::OpenAsym)
          d = std::min(d, std::abs(a + b + c.eta - double(k) * kPi * kI));
      }
      return d;
    }
  }
  return std::abs(a - b);
}

cplx mod_ipi(cplx z) {
  double im = std::remainder(z.imag(), kPi);
  if (im <= -kPi / 2 + 1e-12) im += kPi;
  return {z.real(), im};
}

}  // namespace

std::vector<cplx> canonical_roots(const TQCase& c, const std::vector<cplx>& roots) {
  std::vector<cplx> out;
  for (cplx z : roots) {
    switch (c.tag) {
      case BetheCase::OpenSym:
        if (z.real() < -0.5 - 1e-9 || (std::abs(z.real() + 0.5) <= 1e-9 && z.imag() < 0))
          z = -z - 1.0;
        break;
      case BetheCase::PeriodicAsym: z = mod_ipi(z); break;
      case BetheCase::OpenAsym: {
        z = mod_ipi(z);
        const double h = -c.eta / 2;
        if (z.real() < h - 1e-9 || (std::abs(z.real() - h) <= 1e-9 && z.imag() < 0))
          z = mod_ipi(-z - c.eta);
        break;
      }
      default: break;
    }
    out.push_back(z);
  }
  std::sort(out.begin(), out.end(), [](cplx a, cplx b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return out;
}

bool same_roots(const TQCase& c, const std::vector<cplx>& a, const std::vector<cplx>& b,
                double radius) {
  if (a.size() != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  for (cplx x : a) {
    bool found = false;
    for (std::size_t j = 0; j < b.size() && !found; ++j)
      if (!used[j] && root_distance(c, x, b[j]) <= radius) used[j] = found = true;
    if (!found) return false;
  }
  return true;
}

// ---------------------------------------------------------------- Newton

namespace {

struct NewtonResult {
  std::vector<cplx> roots;
  double residual = INFINITY;
  bool converged = false;
};

NewtonResult newton(const TQCase& c, std::vector<cplx> z, int inf, double tol) {
  const std::size_t M = z.size();
  NewtonResult res;
  auto F = log_residuals(c, z, inf);
  double f = inf_norm(F);
  // near-coincident pairs (mu_k + mu_l ~ 1e-5) put the rounding floor of F above tol;
  // a stalled iterate below this bound counts as converged
  constexpr double kFloor = 1e-9;
  bool stalled = false;
  for (int it = 0; it < 200 && std::isfinite(f); ++it) {
    if (f < tol) break;
    Eigen::MatrixXcd J(M, M);
    Eigen::VectorXcd rhs(M);
    for (std::size_t k = 0; k < M; ++k) rhs(k) = -F[k];
    for (std::size_t l = 0; l < M; ++l) {
      const double h = 1e-7 * std::max(1.0, std::abs(z[l]));
      auto zp = z, zm = z;
      zp[l] += h;
      zm[l] -= h;
      for (std::size_t k = 0; k < M; ++k)
        J(k, l) = wrap(log_ratio(c, zp, inf, k) - log_ratio(c, zm, inf, k)) / (2.0 * h);
    }
    const Eigen::FullPivLU<Eigen::MatrixXcd> lu(J);
    if (!lu.isInvertible()) break;
    const Eigen::VectorXcd step = lu.solve(rhs);
    if (!step.allFinite()) break;
    double scale = 1.0;
    for (cplx x : z) scale = std::max(scale, std::abs(x));
    if (step.cwiseAbs().maxCoeff() < 1e-14 * scale) {
      stalled = true;
      break;
    }
    double lambda = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 40; ++halving, lambda *= 0.5) {
      auto zn = z;
      for (std::size_t k = 0; k < M; ++k) zn[k] += lambda * step(k);
      const auto Fn = log_residuals(c, zn, inf);
      const double fn = inf_norm(Fn);
      if (fn < f) {
        z = std::move(zn);
        F = Fn;
        f = fn;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      stalled = true;
      break;
    }
  }
  res.roots = z;
  res.residual = f;
  res.converged = f < tol || (c.symmetric() && stalled && f < kFloor);
  return res;
}

// Polynomial form num - den of the equation for root k; smoother far from a solution.
cplx poly_residual(const TQCase& c, const std::vector<cplx>& mu, std::size_t k) {
  const cplx x = mu[k];
  const int N = c.N;
  cplx num = 1.0, den = 1.0;
  switch (c.tag) {
    case BetheCase::PeriodicSym:
    case BetheCase::TwistedSym:
      num = std::pow(x + 1.0, N);
      den = std::pow(x, N) * (c.tag == BetheCase::TwistedSym ? -1.0 : 1.0);
      for (std::size_t l = 0; l < mu.size(); ++l)
        if (l != k) {
          num *= x - mu[l] - 1.0;
          den *= x - mu[l] + 1.0;
        }
      break;
    case BetheCase::OpenSym: {
      const double b = c.branch;
      num = (1.0 - b * c.w1 * (x + 1.0)) * (1.0 + b * c.w2 * (x + 1.0)) * std::pow(x, 2 * N);
      den = (1.0 + b * c.w1 * x) * (1.0 - b * c.w2 * x) * std::pow(x + 1.0, 2 * N);
      for (std::size_t l = 0; l < mu.size(); ++l)
        if (l != k) {
          num *= (x - mu[l] + 1.0) * (x + mu[l] + 2.0);
          den *= (x - mu[l] - 1.0) * (x + mu[l]);
        }
      break;
    }
    case BetheCase::PeriodicAsym: {
      const cplx e = c.eta;
      num = std::exp(-double(N) * e) * std::pow(std::sinh(x + e), N);
      den = std::pow(std::sinh(x), N);
      for (std::size_t l = 0; l < mu.size(); ++l)
        if (l != k) {
          num *= std::sinh(x - mu[l] - e);
          den *= std::sinh(x - mu[l] + e);
        }
      break;
    }
    case BetheCase::OpenAsym: {
      const cplx e = c.eta;
      num = open_asym_f(c, x);
      den = -open_asym_f(c, -x - e);
      for (cplx m : mu) {
        num *= std::sinh(x - e - m) * std::sinh(x + m);
        den *= std::sinh(x + e - m) * std::sinh(x + m + 2.0 * e);
      }
      break;
    }
  }
  return num - den;
}

// Damped Newton on the polynomial form; a globalization step before the log-form polish.
std::vector<cplx> newton_poly(const TQCase& c, std::vector<cplx> z) {
  const std::size_t M = z.size();
  auto eval = [&](const std::vector<cplx>& w) {
    std::vector<cplx> G(M);
    for (std::size_t k = 0; k < M; ++k) G[k] = poly_residual(c, w, k);
    return G;
  };
  auto G = eval(z);
  double g = inf_norm(G);
  for (int it = 0; it < 100 && std::isfinite(g) && g > 1e-14; ++it) {
    Eigen::MatrixXcd J(M, M);
    Eigen::VectorXcd rhs(M);
    for (std::size_t k = 0; k < M; ++k) rhs(k) = -G[k];
    for (std::size_t l = 0; l < M; ++l) {
      const double h = 1e-7 * std::max(1.0, std::abs(z[l]));
      auto zp = z, zm = z;
      zp[l] += h;
      zm[l] -= h;
      for (std::size_t k = 0; k < M; ++k)
        J(k, l) = (poly_residual(c, zp, k) - poly_residual(c, zm, k)) / (2.0 * h);
    }
    const Eigen::FullPivLU<Eigen::MatrixXcd> lu(J);
    if (!lu.isInvertible()) break;
    const Eigen::VectorXcd step = lu.solve(rhs);
    if (!step.allFinite()) break;
    double lambda = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving, lambda *= 0.5) {
      auto zn = z;
      for (std::size_t k = 0; k < M; ++k) zn[k] += lambda * step(k);
      const auto Gn = eval(zn);
      const double gn = inf_norm(Gn);
      if (gn < g) {
        z = std::move(zn);
        G = Gn;
        g = gn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  return z;
}

bool admissible(const TQCase& c, const std::vector<cplx>& z) {
  for (std::size_t k = 0; k < z.size(); ++k) {
    const cplx x = z[k];
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag()) || std::abs(x.real()) > 1e4 ||
        std::abs(x.imag()) > 1e4)
      return false;
    switch (c.tag) {
      case BetheCase::PeriodicSym:
      case BetheCase::TwistedSym:
        if (std::abs(x) < 1e-6 || std::abs(x + 1.0) < 1e-6) return false;
        break;
      case BetheCase::OpenSym:
        if (std::abs(x) < 1e-6 || std::abs(x + 1.0) < 1e-6 || std::abs(2.0 * x + 1.0) < 1e-6)
          return false;
        break;
      case BetheCase::PeriodicAsym:
        // beyond this the residual is below e^{-24}: indistinguishable from a root at infinity
        if (std::abs(x.real()) > 12.0) return false;
        if (std::abs(std::sinh(x)) < 1e-6 || std::abs(std::sinh(x + c.eta)) < 1e-6) return false;
        break;
      case BetheCase::OpenAsym:
        if (std::abs(x.real()) > 12.0) return false;
        if (std::abs(std::sinh(x)) < 1e-6 || std::abs(std::sinh(x + c.eta)) < 1e-6 ||
            std::abs(std::sinh(2.0 * x + c.eta)) < 1e-6)
          return false;
        break;
    }
    for (std::size_t l = 0; l < k; ++l)
      if (root_distance(c, x, z[l]) < 1e-6) return false;
  }
  return true;
}

}  // namespace

int resolved_threads(int hint) {
  int n = hint;
  if (n <= 0) {
    if (const char* env = std::getenv("D2STOCH_THREADS")) n = std::atoi(env);
  }
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(n, 1, 64);
}

bool polish(RootSet& rs, double tol) {
  if (rs.finite.empty()) {
    rs.residual = 0.0;
    return true;
  }
  auto r = newton(rs.sector, rs.finite, rs.infCount, tol);
  if (!r.converged || !admissible(rs.sector, r.roots)) return false;
  rs.finite = canonical_roots(rs.sector, r.roots);
  rs.residual = bae_residual(rs);
  return true;
}

std::vector<RootSet> solve_bae(const TQCase& c, int M, const SolveOptions& opt, SolveStats* stats) {
  std::vector<RootSet> found;
  if (M == 0) {
    RootSet rs;
    rs.sector = c;
    found.push_back(rs);
    return found;
  }
  std::vector<std::vector<cplx>> starts;
  for (const auto& w : opt.warmStarts)
    if (static_cast<int>(w.size()) == M) {
      starts.push_back(w);
      // rounded printed pairs such as +-iy sit exactly on mu_k + mu_l = 0
      for (double d : {1e-4, -1e-4}) {
        auto shifted = w;
        for (auto& x : shifted) x += d;
        starts.push_back(shifted);
      }
    }
  std::mt19937_64 rng(opt.seed + 7919ull * static_cast<unsigned>(M) +
                      104729ull * static_cast<unsigned>(c.tag));
  const bool sym = c.symmetric();
  std::uniform_real_distribution<double> re(sym ? -3.0 : -2.0, sym ? 2.0 : 2.0);
  std::uniform_real_distribution<double> im(sym ? -3.0 : -kPi / 2, sym ? 3.0 : kPi / 2);
  for (int s = 0; s < opt.seedsPerRoot * M; ++s) {
    std::vector<cplx> z(M);
    for (auto& x : z) {
      const double a = re(rng);
      x = cplx(a, im(rng));
    }
    starts.push_back(z);
  }
  // near-singular pairs mu, -mu + O(1e-5) have narrow basins; seed them directly
  if (c.tag == BetheCase::OpenSym && M >= 2) {
    std::uniform_real_distribution<double> y(0.05, 3.0);
    for (int s = 0; s < opt.seedsPerRoot * M / 4; ++s) {
      std::vector<cplx> z(M);
      for (auto& x : z) {
        const double a = re(rng);
        x = cplx(a, im(rng));
      }
      const double b = y(rng), d = (s % 2 ? 1e-4 : -1e-4);
      z[0] = cplx(d, b);
      z[1] = cplx(d, -b);
      starts.push_back(z);
    }
  }

  std::vector<std::optional<std::vector<cplx>>> results(starts.size());
  std::vector<char> conv(starts.size(), 0);
  const int T = std::min<int>(resolved_threads(opt.threads), static_cast<int>(starts.size()));
  auto worker = [&](int t) {
    for (std::size_t i = t; i < starts.size(); i += T) {
      auto r = newton(c, starts[i], 0, opt.tol);
      if (!r.converged || !admissible(c, r.roots)) r = newton(c, newton_poly(c, starts[i]), 0, opt.tol);
      conv[i] = r.converged;
      if (r.converged && admissible(c, r.roots)) results[i] = canonical_roots(c, r.roots);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < T; ++t) pool.emplace_back(worker, t);
  worker(0);
  for (auto& th : pool) th.join();

  auto add = [&](const std::vector<cplx>& roots) {
    for (const auto& f : found)
      if (same_roots(c, f.finite, roots)) return false;
    RootSet rs;
    rs.sector = c;
    rs.finite = roots;
    rs.residual = bae_residual(rs);
    found.push_back(rs);
    return true;
  };
  SolveStats st;
  st.starts = static_cast<int>(starts.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    st.converged += conv[i];
    if (results[i]) {
      ++st.admissible;
      add(*results[i]);
    }
  }
  // conjugate partners: real parameters map solutions to solutions
  const std::size_t n = found.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<cplx> conj;
    for (cplx z : found[i].finite) conj.push_back(std::conj(z));
    bool present = false;
    for (const auto& f : found) present = present || same_roots(c, f.finite, conj);
    if (present) continue;
    auto r = newton(c, conj, 0, opt.tol);
    if (r.converged && admissible(c, r.roots)) add(canonical_roots(c, r.roots));
  }
  if (stats) *stats = st;
  return found;
}

std::vector<RootSet> with_descendants(const RootSet& hw) {
  std::vector<RootSet> out;
  const int M = static_cast<int>(hw.finite.size());
  for (int k = 1; k <= hw.sector.N - 2 * M; ++k) {
    RootSet d = hw;
    d.infCount = k;
    out.push_back(d);
  }
  return out;
}

// ---------------------------------------------------------------- lane enumeration

namespace {

std::vector<std::vector<cplx>> table_warm(const TQCase& c) {
  const std::vector<TableRow>* rows = nullptr;
  if (c.tag == BetheCase::PeriodicSym && c.N == 4) rows = &table1();
  if (c.tag == BetheCase::TwistedSym && c.N == 4) rows = &table2();
  if (c.tag == BetheCase::OpenSym && c.N == 3) {
    const auto t3 = BoundaryRates::table3();
    for (Lane l : {Lane::Sigma, Lane::Tau}) {
      const auto r = t3.lane(l);
      if (std::abs(c.w1 - (r[0] + r[1])) < 1e-12 && std::abs(c.w2 - (r[2] + r[3])) < 1e-12)
        rows = &table3(l, c.branch);
    }
  }
  std::vector<std::vector<cplx>> out;
  if (!rows) return out;
  for (const auto& r : *rows)
    if (r.infCount == 0 && !r.finite.empty() && !is_singular_pair(r.finite)) out.push_back(r.finite);
  return out;
}

int binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<int>(r);
}

Candidate make_candidate(const RootSet& rs, int mult) {
  Candidate cd;
  cd.roots = rs;
  cd.multiplicity = mult;
  cd.label = label_of(rs);
  if (!rs.singular) cd.energy = energy(rs);
  return cd;
}

}  // namespace

LaneSolution solve_lane(const TQCase& c, const SolveOptions& optIn, bool tableWarmStarts) {
  LaneSolution sol;
  sol.tq = c;
  SolveOptions opt = optIn;
  if (tableWarmStarts) {
    const auto w = table_warm(c);
    opt.warmStarts.insert(opt.warmStarts.end(), w.begin(), w.end());
  }
  const int N = c.N;
  // Escalate seeds until the sector holds as many sets as the state count predicts.
  auto solve_sector = [&](int M, int expected) {
    SolveStats st;
    auto sets = solve_bae(c, M, opt, &st);
    int round = 1;
    for (; static_cast<int>(sets.size()) < expected && round < 4; ++round) {
      SolveOptions more = opt;
      more.seedsPerRoot = opt.seedsPerRoot << round;
      more.seed = opt.seed + static_cast<std::uint64_t>(round);
      SolveStats s2;
      for (auto& rs : solve_bae(c, M, more, &s2)) {
        bool dup = false;
        for (const auto& f : sets) dup = dup || same_roots(c, f.finite, rs.finite);
        if (!dup) sets.push_back(rs);
      }
      st.starts += s2.starts;
      st.converged += s2.converged;
      st.admissible += s2.admissible;
    }
    st.rounds = round;
    st.expected = expected;
    st.found = static_cast<int>(sets.size());
    sol.stats[M] = st;
    return sets;
  };
  switch (c.tag) {
    case BetheCase::PeriodicSym:
    case BetheCase::TwistedSym:
      for (int M = 0; 2 * M <= N; ++M) {
        const int mult = c.tag == BetheCase::PeriodicSym ? N - 2 * M + 1 : (2 * M < N ? 2 : 1);
        const bool withSingular = M == 2 && N % 2 == 0;
        const int count = c.tag == BetheCase::PeriodicSym ? binom(N, M) - binom(N, M - 1) : binom(N, M);
        for (auto& rs : solve_sector(M, count - (withSingular ? 1 : 0))) {
          sol.sets.push_back(rs);
          sol.candidates.push_back(make_candidate(rs, mult));
        }
        if (withSingular) {
          RootSet sp;
          sp.sector = c;
          sp.finite = {-1.0, 0.0};
          sp.singular = true;
          sol.sets.push_back(sp);
          sol.candidates.push_back(make_candidate(sp, mult));
        }
      }
      break;
    case BetheCase::OpenSym:
      for (int M = 0; M <= N; ++M)
        for (auto& rs : solve_sector(M, binom(N, M))) {
          sol.sets.push_back(rs);
          sol.candidates.push_back(make_candidate(rs, 1));
        }
      break;
    case BetheCase::PeriodicAsym:
      for (int m = 0; 2 * m <= N; ++m) {
        const int mult = 2 * m < N ? 2 : 1;
        if (m > 0) {
          RootSet steady;
          steady.sector = c;
          steady.infCount = m;
          sol.sets.push_back(steady);
          sol.candidates.push_back(make_candidate(steady, mult));
        }
        for (auto& rs : solve_sector(m, m == 0 ? 1 : binom(N, m) - 1)) {
          sol.sets.push_back(rs);
          sol.candidates.push_back(make_candidate(rs, mult));
        }
      }
      break;
    case BetheCase::OpenAsym: {
      for (auto& rs : solve_sector(N - 1, (1 << N) - 1)) {
        sol.sets.push_back(rs);
        sol.candidates.push_back(make_candidate(rs, 1));
      }
      RootSet steady;
      steady.sector = c;
      steady.steadyBranch = true;
      sol.sets.push_back(steady);
      sol.candidates.push_back(make_candidate(steady, 1));
      break;
    }
  }
  return sol;
}

// ---------------------------------------------------------------- reconciliation

SpectrumReconciliation reconcile(const std::vector<cplx>& ed, const std::vector<Candidate>& cands) {
  SpectrumReconciliation rec;
  struct Slot {
    std::size_t cand;
  };
  std::vector<Slot> regular, singular;
  for (std::size_t i = 0; i < cands.size(); ++i)
    for (int k = 0; k < cands[i].multiplicity; ++k)
      (cands[i].roots.singular ? singular : regular).push_back({i});
  struct Pair {
    double d;
    std::size_t e, s;
  };
  std::vector<Pair> pairs;
  pairs.reserve(ed.size() * regular.size());
  for (std::size_t e = 0; e < ed.size(); ++e)
    for (std::size_t s = 0; s < regular.size(); ++s)
      pairs.push_back({std::abs(ed[e] - cands[regular[s].cand].energy), e, s});
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.d < b.d; });
  std::vector<char> edUsed(ed.size(), 0), slotUsed(regular.size(), 0);
  for (const auto& p : pairs) {
    if (edUsed[p.e] || slotUsed[p.s]) continue;
    edUsed[p.e] = slotUsed[p.s] = 1;
    const auto& cd = cands[regular[p.s].cand];
    rec.rows.push_back({ed[p.e], cd.energy, p.d, cd.label, false});
    rec.maxResidual = std::max(rec.maxResidual, p.d);
  }
  std::size_t e = 0;
  for (const auto& s : singular) {
    while (e < ed.size() && edUsed[e]) ++e;
    if (e == ed.size()) {
      ++rec.unmatchedBethe;
      continue;
    }
    edUsed[e] = 1;
    rec.rows.push_back({ed[e], ed[e], 0.0, cands[s.cand].label, true});
    ++rec.singularAssigned;
  }
  for (char u : edUsed) rec.unmatchedED += !u;
  for (char u : slotUsed) rec.unmatchedBethe += !u;
  std::sort(rec.rows.begin(), rec.rows.end(), [](const MatchRow& a, const MatchRow& b) {
    return a.ed.real() != b.ed.real() ? a.ed.real() < b.ed.real() : a.ed.imag() < b.ed.imag();
  });
  return rec;
}

std::vector<Candidate> combine_lanes(const std::vector<Candidate>& a, const std::vector<Candidate>& b) {
  std::vector<Candidate> out;
  for (const auto& x : a)
    for (const auto& y : b) {
      Candidate c;
      c.roots = x.roots.singular ? x.roots : y.roots;
      c.roots.singular = x.roots.singular || y.roots.singular;
      c.energy = x.energy + y.energy;
      c.multiplicity = x.multiplicity * y.multiplicity;
      c.label = "sigma" + x.label + " + tau" + y.label;
      out.push_back(c);
    }
  return out;
}

}  // namespace d2stoch
