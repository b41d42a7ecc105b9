#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "d2stoch/markov.hpp"

using namespace d2stoch;

namespace {

GeneratorSpec spec(int N, Boundary b, Symmetry s = Symmetry::Symmetric, double e1 = 0.3, double e2 = 0.7) {
  GeneratorSpec g;
  g.N = N;
  g.boundary = b;
  g.symmetry = s;
  if (s == Symmetry::Asymmetric) {
    g.eta1 = e1;
    g.eta2 = e2;
  }
  if (b == Boundary::Open) g.rates = BoundaryRates::table3();
  return g;
}

// Independent Kronecker sum: Ms (x) I + I (x) Mt in the lane basis.
CMatrix kron_sum(const CMatrix& Ms, const CMatrix& Mt, double wS = 1.0, double wT = 1.0) {
  const int n = static_cast<int>(Ms.rows());
  return wS * kron(Ms, identity(n)) + wT * kron(identity(n), Mt);
}

double column_sum_defect(const RMatrix& M) { return M.colwise().sum().cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("markov") {
  TEST_CASE("symmetric local generator entries") {
    const CMatrix L = local_generator(spec(2, Boundary::Periodic)).bulk;
    // |j1 j2> = 4 j1 + j2 with (-2,-1,+1,+2) = 0..3
    CHECK(L(4, 1) == cplx(1.0));   // |-2,-1> -> |-1,-2>
    CHECK(L(3, 3) == cplx(-2.0));  // |-2,+2> column diagonal
    CHECK(L.colwise().sum().cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("q-rate generator approaches the symmetric one linearly") {
    const CMatrix S = local_generator(spec(2, Boundary::Periodic)).bulk;
    double prev = 0.0;
    for (double eta : {1e-2, 1e-3, 1e-4}) {
      const CMatrix A = local_generator(spec(2, Boundary::Periodic, Symmetry::Asymmetric, eta, eta)).bulk;
      const double d = max_abs(A - S);
      CHECK(d <= 2.02 * (std::exp(eta) - 1.0));  // diagonal carries two rates
      if (prev > 0.0) CHECK(d / prev == doctest::Approx(0.1).epsilon(0.02));
      prev = d;
    }
  }

  TEST_CASE("ASEP lane rates") {
    const double eta = std::log(2.0);
    const CMatrix L = lane_local_generator(spec(2, Boundary::Periodic, Symmetry::Asymmetric, eta, 0.5), Lane::Sigma).bulk;
    // basis |ab> = 2a + b; hops |01> <-> |10>
    std::vector<double> hops = {L(2, 1).real(), L(1, 2).real()};
    std::sort(hops.begin(), hops.end());
    CHECK(hops[0] == doctest::Approx(0.5));
    CHECK(hops[1] == doctest::Approx(2.0));
  }

  TEST_CASE("generator examples") {
    const Generator P = build_generator(spec(2, Boundary::Periodic));
    CHECK(P.dim() == 16);
    CHECK(null_space(P.cdense()).cols() == 9);

    const Generator O = build_generator(spec(1, Boundary::Open));
    CHECK(O.dim() == 4);
    CHECK(null_space(O.cdense()).cols() == 1);

    const Generator T = build_generator(spec(2, Boundary::Twisted));
    CHECK(column_sum_defect(T.dense()) <= 1e-12);
    CHECK(null_space(T.cdense()).cols() == 4);

    CHECK_THROWS_AS(build_generator(spec(1, Boundary::Periodic)), std::invalid_argument);
  }

  TEST_CASE("generators are stochastic") {
    for (Boundary b : {Boundary::Periodic, Boundary::Twisted, Boundary::Open})
      for (int N : {2, 3}) {
        const Generator G = build_generator(spec(N, b));
        CHECK(G.report.stochastic);
        CHECK(column_sum_defect(G.dense()) <= 1e-12);
        CHECK(G.report.minOffDiagonal >= 0.0);
      }
    for (Boundary b : {Boundary::Periodic, Boundary::Open})
      for (AsymVariant v : {AsymVariant::RawM, AsymVariant::EquivalentMbar}) {
        GeneratorSpec g = spec(3, b, Symmetry::Asymmetric);
        g.variant = v;
        const Generator G = build_generator(g);
        CHECK(G.report.stochastic);
        CHECK(column_sum_defect(G.dense()) <= 1e-12);
      }
  }

  TEST_CASE("sign regime violations are reported") {
    GeneratorSpec g = spec(2, Boundary::Open);
    g.rates.s1 = -0.1;
    CHECK_THROWS_AS(build_generator(g), StochasticityViolation);
    g.rates = BoundaryRates::table3();
    g.rates.t2p = 0.2;
    CHECK_THROWS_AS(build_generator(g), StochasticityViolation);
    // zero rates are allowed
    g.rates = BoundaryRates{};
    CHECK_NOTHROW(build_generator(g));
  }

  TEST_CASE("charges") {
    const auto q1 = charge_operator(Charge::Q1, 1), q2 = charge_operator(Charge::Q2, 1);
    CHECK(q1.diag[static_cast<std::size_t>(species_index(2))] == 1);
    CHECK(q2.diag[static_cast<std::size_t>(species_index(2))] == 1);
    const std::size_t idx =
        SiteIndexing{3, 4}.encode({species_index(-2), species_index(-1), species_index(+1)});
    CHECK(charge_operator(Charge::Q1, 3).diag[idx] == 1);
    CHECK(charge_operator(Charge::Q2, 3).diag[idx] == 1);
    for (int v : charge_operator(Charge::Q1, 4).diag) CHECK((v >= 0 && v <= 4));

    const Generator P = build_generator(spec(3, Boundary::Periodic));
    CHECK(commutator_norm(charge_operator(Charge::Q1, 3), P.A) <= 1e-12);
    CHECK(commutator_norm(charge_operator(Charge::Q2, 3), P.A) <= 1e-12);
    const Generator A = build_generator(spec(3, Boundary::Periodic, Symmetry::Asymmetric));
    CHECK(commutator_norm(charge_operator(Charge::Q1, 3), A.A) <= 1e-12);
    CHECK(commutator_norm(charge_operator(Charge::Q2, 3), A.A) <= 1e-12);
    // negative control: the twist breaks both charges
    const Generator T = build_generator(spec(3, Boundary::Twisted));
    CHECK(commutator_norm(charge_operator(Charge::Q1, 3), T.A) > 0.5);
    CHECK(commutator_norm(charge_operator(Charge::Q2, 3), T.A) > 0.5);
  }

  TEST_CASE("translation invariance of the periodic chain") {
    for (int N : {2, 3}) {
      const CMatrix M = build_generator(spec(N, Boundary::Periodic)).cdense();
      const CMatrix S = cyclic_shift(N, 4);
      CHECK(max_abs(S * M * S.transpose() - M) == 0.0);
    }
  }

  TEST_CASE("symmetric lane generator is the SSEP sum of P - I") {
    const int N = 3;
    const CMatrix P2 = permutation_matrix(2);
    CMatrix ref = CMatrix::Zero(8, 8);
    for (int k = 1; k <= N; ++k) ref += embed_pair(P2 - identity(4), k, N, 2);
    const auto lanes = lane_generators(spec(N, Boundary::Periodic));
    CHECK(max_abs(lanes.first.cdense() - ref) <= 1e-15);
    CHECK(max_abs(lanes.second.cdense() - ref) <= 1e-15);
  }

  TEST_CASE("lane Kronecker sum after interleaving") {
    const int N = 3;
    const CMatrix Pi = interleave_permutation(N);
    for (Boundary b : {Boundary::Periodic, Boundary::Twisted, Boundary::Open}) {
      const GeneratorSpec g = spec(N, b);
      const auto lanes = lane_generators(g);
      const CMatrix lhs = Pi * build_generator(g).cdense() * Pi.transpose();
      CHECK(max_abs(lhs - kron_sum(lanes.first.cdense(), lanes.second.cdense())) <= 1e-12);
    }
    for (Boundary b : {Boundary::Periodic, Boundary::Open}) {
      const GeneratorSpec g = spec(N, b, Symmetry::Asymmetric);
      const auto lanes = lane_generators(g);
      const CMatrix lhs = Pi * build_generator(g).cdense() * Pi.transpose();
      CHECK(max_abs(lhs - kron_sum(lanes.first.cdense(), lanes.second.cdense())) <= 1e-12);
    }
  }

  TEST_CASE("coth-rate generator is the sinh-weighted lane sum") {
    GeneratorSpec g = spec(2, Boundary::Periodic, Symmetry::Asymmetric, 0.3, 0.7);
    g.variant = AsymVariant::RawM;
    const auto lanes = lane_generators(g);
    const CMatrix Pi = interleave_permutation(2);
    const CMatrix lhs = Pi * build_generator(g).cdense() * Pi.transpose();
    const CMatrix rhs =
        kron_sum(lanes.first.cdense(), lanes.second.cdense(), 1.0 / std::sinh(0.3), 1.0 / std::sinh(0.7));
    CHECK(max_abs(lhs - rhs) <= 1e-12);
  }

  TEST_CASE("printed coth-rate diagonal differs at 0-based entries 6 and 9") {
    GeneratorSpec g = spec(2, Boundary::Periodic, Symmetry::Asymmetric);
    g.variant = AsymVariant::RawM;
    const CMatrix L = local_generator(g).bulk;
    const auto printed = printed_rawm_diagonal(0.3, 0.7);
    for (int i = 0; i < 16; ++i) {
      const double d = std::abs(L(i, i).real() - printed[static_cast<std::size_t>(i)]);
      if (i == 6 || i == 9)
        CHECK(d == doctest::Approx(2.0));
      else
        CHECK(d <= 1e-14);
    }
  }

  TEST_CASE("species labels") {
    for (int l : {-2, -1, 1, 2}) CHECK(species_label(species_index(l)) == l);
    CHECK_THROWS(species_index(0));
  }
}
