#include "doctest.h"

#include <cmath>

#include "brwld/reproduction.hpp"

using namespace brwld;

namespace {

ReproductionLaw c2pm1() {
  return parse_law("kind=tabulated\nrow = 1/4 : 1 1\nrow = 1/2 : 1 -1\nrow = 1/4 : -1 -1\n");
}

}  // namespace

TEST_CASE("law parsing accepts the documented schema") {
  const ReproductionLaw law = c2pm1();
  REQUIRE(law.rows.size() == 3);
  CHECK(law.tick_denom == 1);
  CHECK(law.rows[1].prob == Rational(1, 2));
  CHECK(law.rows[2].ticks == std::vector<std::int64_t>{-1, -1});
  CHECK(law.mean_count() == doctest::Approx(2.0));

  const ReproductionLaw g = parse_law("kind=fixed_gaussian b=3 mean=-0.5 sd=2");
  CHECK(g.b == 3);
  CHECK(g.mean_d == doctest::Approx(-0.5));
  CHECK(g.sd_d == doctest::Approx(2.0));

  const ReproductionLaw m = parse_law("kind=mixed_gaussian sd=1\nprob = 0 0.6; prob = 2 0.4");
  CHECK(m.offspring_probs.size() == 2);
  CHECK(m.mean_count() == doctest::Approx(0.8));

  // rational decimals parse exactly
  const ReproductionLaw frac = parse_law("kind=tabulated\nrow = 0.25 : 0.5\nrow = 0.75 : -1/3");
  CHECK(frac.rows[0].prob == Rational(1, 4));
  CHECK(frac.tick_denom == 6);
  CHECK(frac.rows[0].ticks[0] == 3);
  CHECK(frac.rows[1].ticks[0] == -2);
}

TEST_CASE("law parsing rejects malformed input with telling messages") {
  CHECK_THROWS_WITH_AS(parse_law("row = 1 : 1"), doctest::Contains("missing 'kind'"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_law("kind=tabulated\nrow = 1/2 : 1\nrow = 1/4 : -1"),
                       doctest::Contains("probabilities sum to 3/4"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_law("kind=tabulated\nrow = 1 :"),
                       doctest::Contains("dies at the root"), std::invalid_argument);
  CHECK_THROWS_AS(parse_law("kind=poisson_gaussian mu=0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_law("kind=tabulated\nrow = 1 : nonsense"), std::exception);
}

TEST_CASE("cumulants of the two-point lattice law match closed forms") {
  const ReproductionLaw law = c2pm1();
  // psi(1) = log(e + 1/e), psi'(1) = tanh 1, sigma^2 = sech^2 1
  const CumulantReport cum = tilted_cumulants(law, 1.0);
  CHECK(cum.psi == doctest::Approx(std::log(2.0 * std::cosh(1.0))).epsilon(1e-12));
  CHECK(cum.psi_prime == doctest::Approx(std::tanh(1.0)).epsilon(1e-12));
  const double sech = 1.0 / std::cosh(1.0);
  CHECK(cum.sigma2 == doctest::Approx(sech * sech).epsilon(1e-12));
  CHECK(cum.rate == doctest::Approx(std::tanh(1.0) - std::log(2.0 * std::cosh(1.0))).epsilon(1e-12));

  const CumulantReport zero = tilted_cumulants(law, 0.0);
  CHECK(zero.psi == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(zero.psi_prime == doctest::Approx(0.0));
}

TEST_CASE("cumulants of the gaussian families match closed forms") {
  const ReproductionLaw fg = parse_law("kind=fixed_gaussian b=2 mean=0 sd=1");
  const CumulantReport cum = tilted_cumulants(fg, 1.5);
  CHECK(cum.psi == doctest::Approx(std::log(2.0) + 1.125).epsilon(1e-12));
  CHECK(cum.psi_prime == doctest::Approx(1.5));
  CHECK(cum.sigma2 == doctest::Approx(1.0));
  CHECK(cum.rate == doctest::Approx(1.125 - std::log(2.0)).epsilon(1e-12));

  const ReproductionLaw pg = parse_law("kind=poisson_gaussian mu=2 mean=0 sd=1");
  CHECK(log_laplace(pg, 1.0) == doctest::Approx(std::log(2.0) + 0.5).epsilon(1e-12));
}

TEST_CASE("Legendre transform: interior, duality and boundaries") {
  const ReproductionLaw fg = parse_law("kind=fixed_gaussian b=2 mean=0 sd=1");
  const LegendreResult in = legendre(fg, 1.5);
  REQUIRE(in.status == LegendreStatus::interior);
  CHECK(in.theta_star == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(in.psi_star == doctest::Approx(1.125 - std::log(2.0)).epsilon(1e-6));

  const ReproductionLaw mix = parse_law("kind=mixed_gaussian sd=1\nprob = 0 0.6; prob = 2 0.4");
  const LegendreResult sub = legendre(mix, 0.5);
  CHECK(sub.psi_star == doctest::Approx(0.125 - std::log(0.8)).epsilon(1e-6));

  const ReproductionLaw law = c2pm1();
  const LegendreResult low = legendre(law, 0.0);
  CHECK(low.status == LegendreStatus::boundary_zero);
  CHECK(low.psi_star == doctest::Approx(-std::log(2.0)).epsilon(1e-12));

  // x at the maximal displacement: -log E(#children at d_max); here the
  // expected number of children exactly at +1 is 2/4 + 1/2 = 1
  const LegendreResult sup = legendre(law, 1.0);
  CHECK(sup.status == LegendreStatus::boundary_sup);
  CHECK(sup.psi_star == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(std::isinf(legendre(law, 2.0).psi_star));
}

TEST_CASE("critical speed") {
  const ReproductionLaw fg = parse_law("kind=fixed_gaussian b=2 mean=0 sd=1");
  const CriticalSpeed s = critical_speed(fg);
  REQUIRE(s.solvable);
  CHECK(s.x_star == doctest::Approx(std::sqrt(2.0 * std::log(2.0))).epsilon(1e-6));

  // deterministic single child stepping +1: psi(theta) = theta, x* = 1
  const ReproductionLaw single = parse_law("kind=tabulated\nrow = 1 : 1");
  CHECK(critical_speed(single).x_star == doctest::Approx(1.0).epsilon(1e-9));

  const ReproductionLaw mix = parse_law("kind=mixed_gaussian sd=1\nprob = 0 0.6; prob = 2 0.4");
  CHECK_FALSE(critical_speed(mix).solvable);
}

TEST_CASE("assumption report distinguishes the example laws") {
  const AssumptionReport lat = check_assumptions(c2pm1(), 1.0);
  CHECK(lat.asn);
  CHECK_FALSE(lat.as1);   // tanh 1 < log(2 cosh 1)
  CHECK(lat.as2);
  CHECK_FALSE(lat.as4);   // lattice
  CHECK(lat.criticality == 1);

  const AssumptionReport g =
      check_assumptions(parse_law("kind=fixed_gaussian b=2 mean=0 sd=1"), 1.5);
  CHECK(g.asn);
  CHECK(g.as1);
  CHECK(g.as2);
  CHECK(g.as3);
  CHECK(g.as4);

  const AssumptionReport single =
      check_assumptions(parse_law("kind=tabulated\nrow = 1 : 1"), 1.0);
  CHECK_FALSE(single.asn);
}

TEST_CASE("theta below zero is rejected") {
  CHECK_THROWS_AS(log_laplace(c2pm1(), -0.5), std::invalid_argument);
  CHECK_THROWS_AS(tilted_cumulants(c2pm1(), -0.5), std::invalid_argument);
}
