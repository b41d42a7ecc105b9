// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any fails.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "d2stoch/algebra.hpp"
#include "d2stoch/bethe.hpp"
#include "d2stoch/dynamics.hpp"
#include "d2stoch/markov.hpp"
#include "d2stoch/transfer.hpp"

using namespace d2stoch;

namespace {

constexpr cplx I{0.0, 1.0};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  return buf;
}

GeneratorSpec gspec(Boundary b, int N, const BoundaryRates& r = BoundaryRates::table3()) {
  GeneratorSpec g;
  g.N = N;
  g.boundary = b;
  if (b == Boundary::Open) g.rates = r;
  return g;
}

TransferSpec tspec(Construction c, int N) {
  TransferSpec t;
  t.construction = c;
  t.N = N;
  if (c == Construction::PeriodicAsym || c == Construction::OpenAsym) {
    t.eta1 = 0.3;
    t.eta2 = 0.7;
  }
  if (c == Construction::OpenSym || c == Construction::OpenAsym) t.rates = BoundaryRates::table3();
  return t;
}

std::vector<cplx> lane_ed(const GeneratorSpec& g, Lane l) {
  const auto lanes = lane_generators(g);
  const CVector ev = eigenvalues((l == Lane::Sigma ? lanes.first : lanes.second).cdense());
  return {ev.data(), ev.data() + ev.size()};
}

// Cold start: no printed roots are used as Newton seeds.
SolveOptions cold() { return SolveOptions{}; }

bool any_match(const TQCase& c, const TableRow& row, const std::vector<Candidate>& cands) {
  return std::any_of(cands.begin(), cands.end(), [&](const Candidate& cd) { return row_matches(c, row, cd.roots); });
}

// ---------------------------------------------------------------- criteria

void c1_algebra(Outcome& o) {
  const auto ybe = verify_ybe(RKind::d2sym(), 100, 1);
  o.require(ybe.maxResidual < 1e-10, "YBE");
  std::vector<cplx> us;
  for (const auto& p : sample_pairs(100, 1)) us.push_back(p.first);
  const auto rp = verify_r_properties(RKind::d2sym(), us);
  o.require(rp.regularity == 0.0, "regularity");
  o.require(rp.unitarity < 1e-10, "unitarity");
  o.require(rp.crossing < 1e-10, "crossing");
  double re = 0.0;
  const BoundaryRates r = BoundaryRates::table3();
  for (bool dual : {false, true}) {
    for (Lane l : {Lane::Sigma, Lane::Tau}) {
      re = std::max(re, verify_re(RESpec{REPairing::SymLane, l, 0.0, r, dual, false}, 50, 3).maxResidual);
      re = std::max(re, verify_re(RESpec{REPairing::AsymLane, l, 0.3, r, dual, false}, 50, 3).maxResidual);
      re = std::max(re, verify_re(RESpec{REPairing::AsymLane, l, 0.7, r, dual, false}, 50, 3).maxResidual);
    }
    re = std::max(re, verify_re(RESpec{REPairing::SymFull, Lane::Sigma, 0.0, r, dual, false}, 20, 3).maxResidual);
  }
  o.require(re < 1e-9, "reflection equations");
  o.detail << "YBE " << sci(ybe.maxResidual) << ", unitarity " << sci(rp.unitarity) << ", crossing "
           << sci(rp.crossing) << ", RE/dual RE " << sci(re);
}

void c2_extraction(Outcome& o) {
  double worst = 0.0;
  std::vector<TransferSpec> specs;
  for (Construction c : {Construction::PeriodicSym, Construction::TwistedSym, Construction::OpenSym,
                         Construction::PeriodicAsym, Construction::OpenAsym})
    specs.push_back(tspec(c, 2));
  specs.push_back(tspec(Construction::PeriodicSym, 3));
  for (const auto& t : specs) {
    const CMatrix M = extract_generator(t).M;
    double d = max_abs(M - reference_generator(t).cast<cplx>());
    // symmetric chains: second route through the markov builder
    if (t.construction == Construction::PeriodicSym || t.construction == Construction::TwistedSym ||
        t.construction == Construction::OpenSym)
      d = std::max(d, max_abs(M - build_generator(t.generator_spec()).cdense()));
    o.require(d <= 1e-7, construction_name(t.construction) + " N=" + std::to_string(t.N));
    worst = std::max(worst, d);
  }
  o.detail << "max entrywise difference " << sci(worst) << " over 6 chains";
}

void c3_factorization(Outcome& o) {
  // Samples in |u| <= 1 around the extraction point. On |u| <= 2 the open double-row matrix
  // reaches ~2e5 and the absolute residual sits at roundoff, so the relative one is reported.
  double tf = 0.0, rel2 = 0.0;
  for (Construction c : {Construction::PeriodicSym, Construction::TwistedSym, Construction::OpenSym,
                         Construction::PeriodicAsym}) {
    const TransferSpec t = tspec(c, 2);
    for (const auto& [u, v] : sample_pairs(10, 11, 1.0)) {
      (void)v;
      tf = std::max(tf, factorization_residual(t, u));
    }
    for (const auto& [u, v] : sample_pairs(10, 11, 2.0)) {
      (void)v;
      rel2 = std::max(rel2, factorization_residual(t, u) / max_abs(transfer(t, u)));
    }
  }
  o.require(tf <= 1e-10, "transfer factorization");
  double gf = 0.0;
  const int N = 3;
  const CMatrix Pi = interleave_permutation(N);
  std::vector<GeneratorSpec> gs = {gspec(Boundary::Periodic, N), gspec(Boundary::Twisted, N), gspec(Boundary::Open, N)};
  for (Boundary b : {Boundary::Periodic, Boundary::Open}) {
    GeneratorSpec g = gspec(b, N);
    g.symmetry = Symmetry::Asymmetric;
    g.eta1 = 0.3;
    g.eta2 = 0.7;
    g.variant = AsymVariant::EquivalentMbar;
    gs.push_back(g);
  }
  for (const auto& g : gs) {
    const auto lanes = lane_generators(g);
    const int n = static_cast<int>(lanes.first.dim());
    const CMatrix sum = kron(lanes.first.cdense(), identity(n)) + kron(identity(n), lanes.second.cdense());
    gf = std::max(gf, max_abs(Pi * build_generator(g).cdense() * Pi.transpose() - sum));
  }
  o.require(gf <= 1e-12, "generator Kronecker sum");
  o.detail << "transfer " << sci(tf) << " at 10 u x 4 chains (|u| <= 1; relative " << sci(rel2)
           << " on |u| <= 2), generator " << sci(gf) << " at N=3";
}

void table_protocol(Outcome& o, const TQCase& c, const std::vector<TableRow>& rows, Boundary b) {
  const auto sol = solve_lane(c, cold(), false);
  // infinite-root descendants are carried as candidate multiplicity; expand them here
  std::vector<Candidate> expanded;
  for (const auto& cd : sol.candidates) {
    expanded.push_back(cd);
    if (c.tag != BetheCase::PeriodicSym || cd.roots.singular) continue;
    const auto desc = with_descendants(cd.roots);
    o.require(static_cast<int>(desc.size()) + 1 == cd.multiplicity, "descendant count");
    for (const auto& d : desc) expanded.push_back(Candidate{d, cd.energy, 1, cd.label});
  }
  int matched = 0;
  for (const auto& row : rows) matched += any_match(c, row, expanded);
  o.require(matched == static_cast<int>(rows.size()), "printed rows");
  double res = 0.0;
  for (const auto& cd : sol.candidates)
    if (!cd.roots.singular && !cd.roots.finite.empty()) res = std::max(res, bae_residual(cd.roots));
  o.require(res < 1e-12, "polished residuals");
  const auto ed = lane_ed(gspec(b, 4), Lane::Sigma);
  const auto rec = reconcile(ed, sol.candidates);
  o.require(ed.size() == 16 && rec.complete(1e-7), "ED reconciliation");
  const bool flagged = std::any_of(rec.rows.begin(), rec.rows.end(), [](const MatchRow& r) { return r.singular; });
  o.require(rec.singularAssigned == 1 && flagged, "singular pair");
  o.detail << matched << "/" << rows.size() << " printed rows (cold start), residual " << sci(res) << ", "
           << rec.rows.size() << " ED eigenvalues within " << sci(rec.maxResidual)
           << ", singular {-1,0} ED-assigned";
}

void c4_table1(Outcome& o) { table_protocol(o, TQCase::periodic_sym(4), table1(), Boundary::Periodic); }
void c5_table2(Outcome& o) { table_protocol(o, TQCase::twisted_sym(4), table2(), Boundary::Twisted); }

void c6_table3(Outcome& o) {
  const BoundaryRates r = BoundaryRates::table3();
  int matched = 0, total = 0;
  double worst = 0.0;
  for (Lane l : {Lane::Sigma, Lane::Tau}) {
    const auto ed = lane_ed(gspec(Boundary::Open, 3), l);
    std::array<std::vector<Candidate>, 2> branchCands;
    for (int b : {1, -1}) {
      const TQCase c = TQCase::open_sym(3, r, l, b);
      const auto sol = solve_lane(c, cold(), false);
      const auto& rows = table3(l, b);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (l == Lane::Sigma && b == 1 && i == 2) {
          // printed -0.5000-0.2299i: erratum for -0.5000-0.2229i
          RootSet printed;
          printed.sector = c;
          printed.finite = rows[i].finite;
          const double printedRes = bae_residual(printed);
          const TableRow corrected{{-0.5 - 0.2229 * I}, 0};
          bool ok = printedRes > 1e-2 && !any_match(c, rows[i], sol.candidates);
          for (const auto& cd : sol.candidates)
            if (row_matches(c, corrected, cd.roots)) {
              const double e = std::abs(std::min_element(ed.begin(), ed.end(), [&](cplx a, cplx bb) {
                                          return std::abs(a - cd.energy) < std::abs(bb - cd.energy);
                                        })[0] - cd.energy);
              ok = ok && bae_residual(cd.roots) < 1e-12 && e < 1e-7;
            }
          o.require(ok, "mu+ row 3 erratum");
          o.detail << "mu+ row 3 printed -0.5000-0.2299i fails its BAE (" << sci(printedRes)
                   << "), solver root -0.5000-0.2229i passes and matches ED; ";
          continue;
        }
        ++total;
        matched += any_match(c, rows[i], sol.candidates);
      }
      const auto rec = reconcile(ed, sol.candidates);
      o.require(ed.size() == 8 && rec.complete(1e-7), "ED reconciliation");
      worst = std::max(worst, rec.maxResidual);
      branchCands[b > 0 ? 0 : 1] = sol.candidates;
    }
    // both branches reach every ED eigenvalue
    for (const auto& cands : branchCands)
      for (cplx e : ed) {
        double best = 1e9;
        for (const auto& cd : cands) best = std::min(best, std::abs(cd.energy - e));
        o.require(best <= 1e-7, "branch equivalence");
      }
  }
  o.require(matched == total, "printed rows");
  o.detail << matched << "/" << total << " other printed rows (cold start), 2 lanes x 2 branches x 8 eigenvalues within "
           << sci(worst);
}

void c7_steady(Outcome& o) {
  struct Case {
    Boundary b;
    int N;
    int dim;
  };
  const std::vector<Case> cases = {{Boundary::Periodic, 2, 9}, {Boundary::Periodic, 3, 16}, {Boundary::Twisted, 2, 4},
                                   {Boundary::Twisted, 3, 4},  {Boundary::Twisted, 4, 4},   {Boundary::Open, 1, 1},
                                   {Boundary::Open, 2, 1},     {Boundary::Open, 3, 1}};
  double overlap = 0.0;
  for (const auto& cs : cases) {
    const auto g = gspec(cs.b, cs.N);
    const CMatrix ns = null_space(build_generator(g).cdense());
    o.require(ns.cols() == cs.dim, "kernel dimension");
    const auto fam = steady_states(g);
    o.require(static_cast<int>(fam.members.size()) == cs.dim, "family size");
    for (const auto& v : fam.members) overlap = std::max(overlap, std::abs(span_overlap(v, ns) - 1.0));
  }
  o.require(overlap <= 1e-9, "overlap");

  using C4 = std::array<double, 4>;
  const std::array<double, 4> e2 = {1, 0, 0, 0}, e1 = {0, 1, 0, 0};
  const std::array<double, 4> half = {0.5, 0.5, 0, 0}, third = {1.0 / 3, 1.0 / 3, 1.0 / 3, 0};
  const auto power = [](const std::array<double, 4>& f) { return product_state({f, f, f, f}); };
  const std::vector<std::pair<RVector, C4>> worked = {
      {power(e2), {1, 1, 1, 1}},
      {power(e1), {1, 1, 1, 1}},
      {power(half), {1, 0, 1, 0}},
      {power(third), {1, 1.0 / 81, 1.0 / 81, 1.0 / 81}},
      {basis_state({-2, -1, -2, 1}), {1, -1, -1, 1}},
      {basis_state({-2, -1, -2, -2}), {1, -1, 1, -1}},
  };
  double proj = 0.0;
  for (const auto& [phi, want] : worked) {
    const auto c = twisted_projection(phi, 4);
    for (int k = 0; k < 4; ++k) proj = std::max(proj, std::abs(c[static_cast<std::size_t>(k)] - want[static_cast<std::size_t>(k)]));
  }
  o.require(proj <= 1e-14, "twisted projections");
  o.detail << "8 kernels with expected dimensions, overlap defect " << sci(overlap)
           << ", 6 twisted projections within " << sci(proj);
}

void c8_dynamics(Outcome& o) {
  const Generator G = build_generator(gspec(Boundary::Periodic, 3));
  std::vector<double> times;
  for (int i = 0; i <= 100; ++i) times.push_back(0.5 * i);

  struct Panel {
    std::vector<int> initial;
    double limit;
    std::vector<std::vector<std::vector<int>>> groups;
  };
  const std::vector<Panel> panels = {
      {{-2, -2, -1}, 1.0 / 3, {{{-1, -2, -2}, {-2, -1, -2}}}},
      {{-2, -1, 1},
       1.0 / 9,
       {{{-1, 1, -2}, {1, -2, -1}, {-2, 1, -1}, {2, -2, -2}}, {{1, -1, -2}, {-1, -2, 1}, {-2, 2, -2}, {-2, -2, 2}}}},
  };
  double lim = 0.0, eq = 0.0;
  for (const auto& p : panels) {
    const auto tr = evolve(G, basis_state(p.initial), times);
    const RVector& last = tr.states.back();
    int support = 0;
    for (Eigen::Index i = 0; i < last.size(); ++i)
      if (last(i) > 1e-3) {
        ++support;
        lim = std::max(lim, std::abs(last(i) - p.limit));
      }
    o.require(support == static_cast<int>(std::lround(1.0 / p.limit)), "support size");
    for (const auto& grp : p.groups) {
      const auto ref = tr.series(grp.front());
      for (const auto& cfg : grp) {
        const auto s = tr.series(cfg);
        for (std::size_t i = 0; i < s.size(); ++i) eq = std::max(eq, std::abs(s[i] - ref[i]));
      }
    }
  }
  o.require(lim <= 1e-6, "asymptotes");
  o.require(eq <= 1e-10, "coefficient equalities");
  const auto grid = short_time_grid();
  const RVector init = basis_state({-2, -1, 1});
  const double s1 = short_time_order(G, init, {-2, -2, 2}, grid).slope;
  const double s2 = short_time_order(G, init, {-1, 1, -2}, grid).slope;
  o.require(std::abs(s1 - 1.0) <= 0.05, "slope 1");
  o.require(std::abs(s2 - 2.0) <= 0.05, "slope 2");
  o.detail << "asymptotes 1/3, 1/9 within " << sci(lim) << " at t=50, caption equalities within " << sci(eq)
           << ", slopes " << s1 << " and " << s2;
}

void c9_profile(Outcome& o) {
  std::vector<BoundaryRates> sets = {BoundaryRates::table3()};
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> U(0.05, 1.0);
  for (int i = 0; i < 3; ++i)
    sets.push_back(BoundaryRates{U(rng), U(rng), U(rng), U(rng), -U(rng), -U(rng), -U(rng), -U(rng)});
  double worst = 0.0;
  for (const auto& r : sets)
    for (int N : {2, 3}) {
      const RVector psi = steady_states(gspec(Boundary::Open, N, r)).members[0];
      for (int k = 1; k <= N; ++k) {
        double p[5];
        for (int sp : {-2, -1, 1, 2}) {
          p[sp + 2] = linear_correlator(psi, {k}, {sp});
          worst = std::max(worst, std::abs(density_profile_open(r, N, k, sp) - p[sp + 2]));
        }
        // lane marginals: sigma counts +1 and +2, tau counts -1 and +2
        worst = std::max(worst, std::abs(lane_profile_open(r, Lane::Sigma, N, k) - (p[3] + p[4])));
        worst = std::max(worst, std::abs(lane_profile_open(r, Lane::Tau, N, k) - (p[1] + p[4])));
      }
    }
  o.require(worst <= 1e-8, "profiles");
  o.detail << "4 rate sets x N in {2,3}: lane and species profiles within " << sci(worst);
}

void c10_asymmetric(Outcome& o) {
  // periodic N=3: lane sums against the 64 eigenvalues of the q-rate generator
  GeneratorSpec g = gspec(Boundary::Periodic, 3);
  g.symmetry = Symmetry::Asymmetric;
  g.eta1 = 0.3;
  g.eta2 = 0.7;
  g.variant = AsymVariant::EquivalentMbar;
  const auto ls = solve_lane(TQCase::periodic_asym(3, 0.3), cold(), false);
  const auto lt = solve_lane(TQCase::periodic_asym(3, 0.7), cold(), false);
  const CVector ev = eigenvalues(build_generator(g).cdense());
  const auto rp = reconcile({ev.data(), ev.data() + ev.size()}, combine_lanes(ls.candidates, lt.candidates));
  o.require(ev.size() == 64 && rp.complete(1e-6), "periodic N=3");

  // open N=2: one finite-root sector plus the steady branch, per lane
  GeneratorSpec og = gspec(Boundary::Open, 2);
  og.symmetry = Symmetry::Asymmetric;
  og.eta1 = 0.3;
  og.eta2 = 0.7;
  double worst = 0.0;
  for (Lane l : {Lane::Sigma, Lane::Tau}) {
    const double eta = l == Lane::Sigma ? 0.3 : 0.7;
    const auto sol = solve_lane(TQCase::open_asym(2, eta, BoundaryRates::table3(), l), cold(), false);
    const auto rec = reconcile(lane_ed(og, l), sol.candidates);
    int steady = 0;
    for (const auto& cd : sol.candidates) steady += cd.roots.steadyBranch;
    o.require(rec.rows.size() == 4 && rec.complete(1e-6) && steady == 1, "open N=2");
    worst = std::max(worst, rec.maxResidual);
  }
  o.detail << "periodic N=3: 64 eigenvalues within " << sci(rp.maxResidual) << "; open N=2: 2 lanes x 4 within "
           << sci(worst);
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Outcome&)> run;
    double budget;  // seconds; 0 for none
  };
  const std::vector<Criterion> all = {
      {1, "algebraic identities", c1_algebra, 10.0},
      {2, "generator extraction", c2_extraction, 60.0},
      {3, "lane factorization", c3_factorization, 0.0},
      {4, "periodic N=4 root table", c4_table1, 60.0},
      {5, "twisted N=4 root table", c5_table2, 0.0},
      {6, "open N=3 root tables", c6_table3, 0.0},
      {7, "steady-state structure", c7_steady, 0.0},
      {8, "relaxation dynamics", c8_dynamics, 0.0},
      {9, "open density profile", c9_profile, 0.0},
      {10, "asymmetric sector", c10_asymmetric, 0.0},
  };
  int failures = 0;
  for (const auto& c : all) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget > 0.0 && secs >= c.budget) {
      o.pass = false;
      o.detail << " [over the " << c.budget << " s budget]";
    }
    failures += !o.pass;
    std::printf("%s %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}
