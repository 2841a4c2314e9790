#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <hetcoop/analytic.hpp>
#include <hetcoop/policies.hpp>

#include "test_util.hpp"

#include <cmath>

using namespace hetcoop;

namespace {
double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }
}  // namespace

TEST_CASE("fallback tier hit probability: frozen values, both routes") {
  const NetworkConfig cfg = std_config();
  // Independently computed with 40-digit arithmetic.
  CHECK(rel_err(psi_m(cfg), 0.01039343180825755357779) < 1e-12);
  QuadratureSpec spec;
  CHECK(rel_err(psi_m(cfg, spec, FormulaPath::integral_only), 0.01039343180825755357779) <
        3e-6);

  // sharp threshold: 4 Mbps pushes the fallback SIR threshold to 2^20 - 1
  const NetworkConfig cfg4 = std_config(4e6);
  CHECK(rel_err(psi_m(cfg4), 5.651811753554009781698e-5) < 1e-12);
  CHECK(rel_err(psi_m(cfg4, spec, FormulaPath::integral_only), 5.651811753554009781698e-5) <
        3e-6);
}

TEST_CASE("scheme 1 per-file hit probability: frozen values") {
  const NetworkConfig cfg = std_config();
  CHECK(rel_err(psi_s1(cfg, 1, 0.9), 0.9087523007094378109032) < 1e-13);
  CHECK(rel_err(psi_s1(cfg, 1, 0.3), 0.5490071004529138264061) < 1e-13);
  CHECK(rel_err(psi_s1(cfg, 2, 0.9), 0.9350323141619746870218) < 1e-9);
  CHECK(rel_err(psi_s1(cfg, 3, 0.9), 0.9435630865584827342779) < 1e-9);
}

TEST_CASE("scheme 1: closed route vs integral route") {
  const NetworkConfig cfg = std_config();
  QuadratureSpec spec;
  for (int K : {1, 2, 3}) {
    for (double T : {0.3, 0.9}) {
      const double closed = psi_s1(cfg, K, T);
      const double integral = psi_s1(cfg, K, T, spec, FormulaPath::integral_only);
      CHECK(rel_err(closed, integral) < 1e-5);
    }
  }
}

TEST_CASE("scheme 1: unequal pathloss exponents (general route), frozen values") {
  const NetworkConfig cfg = std_config(1e6, 4.2, 3.8);
  CHECK(rel_err(psi_m(cfg), 0.02152295858559825811923) < 3e-6);
  CHECK(rel_err(psi_s1(cfg, 1, 0.7), 0.7851220673430210688796) < 3e-6);
  CHECK(rel_err(psi_s1(cfg, 2, 0.7), 0.8216892598979736986083) < 3e-6);
}

TEST_CASE("scheme 1: derivative matches finite differences and is positive") {
  const NetworkConfig cfg = std_config();
  for (int K : {1, 2}) {
    const Scheme1Evaluator eval(cfg, K);
    for (double T : {0.05, 0.4, 0.9}) {
      const double h = 1e-6;
      const double fd = (eval.psi(T + h) - eval.psi(T - h)) / (2.0 * h);
      const double an = eval.dpsi(T);
      CHECK(an > 0.0);
      CHECK(rel_err(an, fd) < 1e-5);
    }
  }
}

TEST_CASE("scheme 2 building blocks: frozen values and the rank-K identities") {
  const NetworkConfig cfg = std_config();
  CHECK(rel_err(q_k1(cfg, 3, 1), 0.9265842314987640272902) < 1e-9);
  CHECK(rel_err(q_k1(cfg, 3, 2), 0.9655334261635854006119) < 1e-9);
  CHECK(q_k1(cfg, 3, 3) == 0.0);
  CHECK(rel_err(q_k2(cfg, 3, 1), 0.8293506903179157693832) < 1e-12);
  CHECK(rel_err(q_k2(cfg, 3, 2), 0.9437401657851919142952) < 1e-9);
  CHECK(rel_err(q_k2(cfg, 3, 3), 0.9690058428716591513728) < 1e-9);

  // all holders among the K nearest means scheme 2 degenerates to scheme 1 at T = 1
  for (int K : {2, 3}) CHECK(rel_err(q_k2(cfg, K, K), psi_s1(cfg, K, 1.0)) < 1e-9);
}

TEST_CASE("scheme 2 building blocks: dual-route agreement") {
  const NetworkConfig cfg = std_config();
  QuadratureSpec spec;
  for (int k : {1, 2}) {
    CHECK(rel_err(q_k1(cfg, 3, k), q_k1(cfg, 3, k, spec, FormulaPath::integral_only)) < 1e-5);
  }
  for (int k : {1, 2, 3}) {
    CHECK(rel_err(q_k2(cfg, 3, k), q_k2(cfg, 3, k, spec, FormulaPath::integral_only)) < 1e-5);
  }
}

TEST_CASE("scheme 2 tables: structure invariants") {
  const NetworkConfig cfg = std_config();
  const StpTables t = build_stp_tables(cfg, 3);
  CHECK(t.coop_size == 3);
  CHECK(t.psi_s2[0] == t.psi_mbs);
  CHECK(t.q1[3] == 0.0);
  for (int k = 0; k <= 3; ++k) {
    CHECK(t.psi_s2[k] >= 0.0);
    CHECK(t.psi_s2[k] <= 1.0);
  }
  for (int k = 1; k <= 3; ++k) CHECK(t.psi_s2[k] > t.psi_s2[k - 1]);
}

TEST_CASE("scheme 2 mixture: endpoints, monotonicity, derivative") {
  const NetworkConfig cfg = std_config();
  const StpTables t = build_stp_tables(cfg, 3);
  CHECK(psi_ms(t, 0.0) == t.psi_mbs);
  CHECK(psi_ms(t, 1.0) == doctest::Approx(t.psi_s2[3]).epsilon(1e-14));
  double prev = 0.0;
  for (double T : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const double v = psi_ms(t, T);
    CHECK(v > prev);
    prev = v;
  }
  for (double T : {0.2, 0.5, 0.8}) {
    const double h = 1e-6;
    const double fd = (psi_ms(t, T + h) - psi_ms(t, T - h)) / (2.0 * h);
    CHECK(rel_err(psi_ms_dT(t, T), fd) < 1e-6);
  }
}

TEST_CASE("evaluator agrees with the one-shot functions") {
  const NetworkConfig cfg = std_config();
  const Scheme1Evaluator eval(cfg, 2);
  CHECK(eval.psi(0.7) == psi_s1(cfg, 2, 0.7));
  CHECK(eval.dpsi(0.7) == psi_s1_dT(cfg, 2, 0.7));
  CHECK(eval.psi_mbs() == psi_m(cfg));
  CHECK(eval.psi(0.7) == eval.psi(0.7));  // memo returns identical bits
}

TEST_CASE("scheme mixtures: fixed caching distribution") {
  const NetworkConfig cfg = std_config();
  const Popularity pop = zipf(10, 0.8);
  CachingDistribution dist;
  dist.cache_size = 2;
  dist.probs = {0.9, 0.8, 0.3, 0, 0, 0, 0, 0, 0, 0};

  const Scheme1Evaluator eval(cfg, 2);
  double tail = 0.0;
  for (int n = 3; n < 10; ++n) tail += pop.probabilities[n];
  const double want = pop.probabilities[0] * eval.psi(0.9) + pop.probabilities[1] * eval.psi(0.8) +
                      pop.probabilities[2] * eval.psi(0.3) + tail * eval.psi_mbs();
  CHECK(rel_err(stp_scheme1(cfg, pop, dist, 2), want) < 1e-14);

  const StpTables t = build_stp_tables(cfg, 2);
  double want2 = tail * t.psi_mbs;
  for (int n = 0; n < 3; ++n) want2 += pop.probabilities[n] * psi_ms(t, dist.probs[n]);
  CHECK(rel_err(stp_scheme2(cfg, pop, dist, 2), want2) < 1e-14);
}

TEST_CASE("schemes coincide under full caching of the head files") {
  const NetworkConfig cfg = std_config();
  const Popularity pop = zipf(10, 0.8);
  const CachingDistribution mpc = baseline_distribution(BaselineKind::most_popular, pop, 2);
  for (int K : {1, 2, 3}) {
    const double s1 = stp_scheme1(cfg, pop, mpc, K);
    const double s2 = stp_scheme2(cfg, pop, mpc, K);
    CHECK(std::abs(s1 - s2) < 1e-9);
  }
}

TEST_CASE("analytic domain errors") {
  const NetworkConfig cfg = std_config();
  CHECK_THROWS_AS((void)psi_s1(cfg, 1, 0.0), DomainError);
  CHECK_THROWS_AS((void)psi_s1(cfg, 1, -0.5), DomainError);
  CHECK_THROWS_AS((void)psi_s1(cfg, 1, 1.5), DomainError);
  CHECK_THROWS_AS((void)psi_s1(cfg, 0, 0.5), DomainError);
  CHECK_THROWS_AS((void)psi_s1(cfg, 9, 0.5), DomainError);
  CHECK_THROWS_AS((void)q_k1(cfg, 3, 0), DomainError);
  CHECK_THROWS_AS((void)q_k1(cfg, 3, 4), DomainError);
  CHECK_THROWS_AS((void)q_k2(cfg, 3, 0), DomainError);
  const StpTables t = build_stp_tables(cfg, 2);
  CHECK_THROWS_AS((void)psi_ms(t, -0.1), DomainError);
  CHECK_THROWS_AS((void)psi_ms(t, 1.1), DomainError);
}
