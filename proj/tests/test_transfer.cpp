#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "d2stoch/transfer.hpp"

using namespace d2stoch;

namespace {

TransferSpec tspec(Construction c, int N, LaneSel lane = LaneSel::Full) {
  TransferSpec t;
  t.construction = c;
  t.N = N;
  t.lane = lane;
  if (c == Construction::PeriodicAsym || c == Construction::OpenAsym) {
    t.eta1 = 0.3;
    t.eta2 = 0.7;
  }
  if (c == Construction::OpenSym || c == Construction::OpenAsym) t.rates = BoundaryRates::table3();
  return t;
}

const Construction kAll[] = {Construction::PeriodicSym, Construction::TwistedSym, Construction::OpenSym,
                             Construction::PeriodicAsym, Construction::OpenAsym};

}  // namespace

TEST_SUITE("transfer") {
  TEST_CASE("single-site monodromy is the R-matrix") {
    const TransferSpec t = tspec(Construction::PeriodicSym, 1);
    for (const auto& [u, v] : sample_pairs(5, 1)) {
      (void)v;
      CHECK(max_abs(monodromy(t, u) - r_matrix(RKind::d2sym(), u)) <= 1e-15);
    }
  }

  TEST_CASE("RTT relation") {
    const TransferSpec t = tspec(Construction::PeriodicSym, 2);
    for (const auto& [u, v] : sample_pairs(20, 2)) CHECK(rtt_residual(t, u, v) < 1e-10);
  }

  TEST_CASE("periodic t(0) is a cyclic shift") {
    for (int N : {2, 3}) {
      const CMatrix t0 = transfer(tspec(Construction::PeriodicSym, N), 0.0);
      const CMatrix S = cyclic_shift(N, 4);
      CHECK(std::min(max_abs(t0 - S), max_abs(t0 - S.transpose())) == 0.0);
    }
  }

  TEST_CASE("open symmetric single site: t(0) is proportional to the identity") {
    const CMatrix t0 = transfer(tspec(Construction::OpenSym, 1), 0.0);
    const cplx c = t0(0, 0);
    CHECK(std::abs(c) > 1e-6);
    CHECK(max_abs(t0 - c * identity(4)) <= 1e-14);
    MESSAGE("t(0) = " << c << " I");
  }

  TEST_CASE("transfer matrices commute") {
    for (Construction c : kAll) {
      const TransferSpec t = tspec(c, 2);
      for (const auto& [u, v] : sample_pairs(20, 4, 1.0)) CHECK(commutator_residual(t, u, v) <= 1e-9);
    }
    const TransferSpec p3 = tspec(Construction::PeriodicSym, 3);
    for (const auto& [u, v] : sample_pairs(5, 4)) CHECK(commutator_residual(p3, u, v) <= 1e-9);
  }

  TEST_CASE("lane factorization of the full transfer matrix") {
    for (Construction c : {Construction::PeriodicSym, Construction::TwistedSym, Construction::OpenSym,
                           Construction::PeriodicAsym}) {
      const TransferSpec t = tspec(c, 2);
      for (const auto& [u, v] : sample_pairs(10, 6, 1.0)) {
        (void)v;
        CHECK(factorization_residual(t, u) <= 1e-10);
      }
    }
    // independent check of the periodic case: build both lanes and the Kronecker product here
    const TransferSpec t = tspec(Construction::PeriodicSym, 2);
    const CMatrix Pi = interleave_permutation(2);
    const cplx u(0.37, -0.21);
    const CMatrix lhs = Pi * transfer(t, u) * Pi.transpose();
    const CMatrix rhs = kron(transfer(t.with_lane(LaneSel::Sigma), u), transfer(t.with_lane(LaneSel::Tau), u));
    CHECK(max_abs(lhs - rhs) <= 1e-12);
  }

  TEST_CASE("analytic derivative agrees with the numeric one") {
    for (Construction c : kAll) {
      const TransferSpec t = tspec(c, 2);
      const cplx u0(0.13, 0.05);
      const CMatrix num = num_derivative([&](cplx u) { return transfer(t, u); }, u0);
      CHECK(max_abs(transfer_derivative(t, u0) - num) <= 1e-8 * std::max(1.0, max_abs(num)));
    }
  }

  TEST_CASE("generator extraction reproduces the built generators") {
    for (Construction c : kAll) {
      for (LaneSel lane : {LaneSel::Full, LaneSel::Sigma, LaneSel::Tau}) {
        const TransferSpec t = tspec(c, 2, lane);
        const Extraction ex = extract_generator(t);
        CHECK(max_abs(ex.M - reference_generator(t).cast<cplx>()) <= 1e-7);
        CHECK(ex.analyticDiff <= 1e-8);
        if (t.open()) {
          CHECK(ex.constantDerived);
          CHECK(ex.columnSpread <= 1e-8);
        }
      }
    }
    const TransferSpec p3 = tspec(Construction::PeriodicSym, 3);
    CHECK(max_abs(extract_generator(p3).M - reference_generator(p3).cast<cplx>()) <= 1e-7);
  }

  TEST_CASE("symmetric extraction equals the markov builders") {
    for (Construction c : {Construction::PeriodicSym, Construction::TwistedSym, Construction::OpenSym}) {
      const TransferSpec t = tspec(c, 2);
      const CMatrix built = build_generator(t.generator_spec()).cdense();
      CHECK(max_abs(extract_generator(t).M - built) <= 1e-7);
      const auto lanes = lane_generators(t.generator_spec());
      CHECK(max_abs(extract_generator(t.with_lane(LaneSel::Sigma)).M - lanes.first.cdense()) <= 1e-7);
      CHECK(max_abs(extract_generator(t.with_lane(LaneSel::Tau)).M - lanes.second.cdense()) <= 1e-7);
    }
  }

  TEST_CASE("asymmetric periodic extraction equals the q-rate lane generators") {
    const TransferSpec t = tspec(Construction::PeriodicAsym, 3);
    GeneratorSpec g = t.generator_spec();
    g.variant = AsymVariant::EquivalentMbar;
    const auto lanes = lane_generators(g);
    CHECK(max_abs(extract_generator(t.with_lane(LaneSel::Sigma)).M - lanes.first.cdense()) <= 1e-7);
    CHECK(max_abs(extract_generator(t.with_lane(LaneSel::Tau)).M - lanes.second.cdense()) <= 1e-7);
  }

  TEST_CASE("spec validation") {
    TransferSpec t = tspec(Construction::PeriodicAsym, 2);
    t.eta1 = 0.0;
    CHECK_THROWS(t.validate());
    TransferSpec z = tspec(Construction::PeriodicSym, 0);
    CHECK_THROWS(z.validate());
  }
}
