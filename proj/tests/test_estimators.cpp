#include "doctest.h"

#include <cmath>

#include "brwld/estimators.hpp"

using namespace brwld;

namespace {

ReproductionLaw c2pm1() {
  return parse_law("kind=tabulated\nrow = 1/4 : 1 1\nrow = 1/2 : 1 -1\nrow = 1/4 : -1 -1\n");
}

}  // namespace

TEST_CASE("spinal estimator degenerates to the pure random walk") {
  // single child stepping +1: D = delta_0, S_n = n = n psi', every replica
  // weight is exactly e^{n(psi - theta psi')} = 1
  const ReproductionLaw single = parse_law("kind=tabulated\nrow = 1 : 1");
  const EstimateRecord rec = spinal_tail(single, 1.0, 5, 0.0, 500, 3);
  CHECK(rec.mean == 1.0);
  CHECK(rec.stderr_ == 0.0);
  const EstimateRecord miss = spinal_tail(single, 1.0, 5, 0.1, 500, 3);
  CHECK(miss.mean == 0.0);
}

TEST_CASE("spinal estimator is unbiased against enumeration at small n") {
  const ReproductionLaw law = c2pm1();
  const double psi_prime = std::tanh(1.0);
  const struct { int n; double a; } cases[] = {{1, 1.0}, {2, 0.0}, {3, 1.0}, {3, 3.0}};
  for (const auto& c : cases) {
    CAPTURE(c.n);
    CAPTURE(c.a);
    const double exact =
        to_double(enumerate_tail(law, c.n, Rational(BigInt(static_cast<int>(c.a)))));
    const EstimateRecord rec =
        spinal_tail(law, 1.0, c.n, c.a - c.n * psi_prime, 30000,
                    101 + static_cast<std::uint64_t>(10 * c.n) + static_cast<std::uint64_t>(c.a));
    CHECK(std::abs(rec.mean - exact) < 3.0 * rec.stderr_ + 1e-12);
  }
}

TEST_CASE("decoration constant degenerate cases") {
  const ReproductionLaw single = parse_law("kind=tabulated\nrow = 1 : 1");
  const CThetaResult one = c_theta(single, 1.0, 20, 300, CThetaVariant::weighted, 5);
  CHECK(one.estimate.mean == 1.0);
  CHECK(one.estimate.stderr_ == 0.0);

  // n_max = 0 freezes the process at delta_0
  const CThetaResult zero = c_theta(c2pm1(), 1.0, 0, 300, CThetaVariant::indicator, 5);
  CHECK(zero.estimate.mean == 1.0);
}

TEST_CASE("many-to-one mean count") {
  // C2PM1 at a=2, n=2: only the four (+1,+1) paths contribute, each with
  // expected count 1/4 -> E Z_2([2,inf)) = 1
  const EstimateRecord rec = mean_count(c2pm1(), 1.0, 2, 2.0, 100000, 7);
  CHECK(std::abs(rec.mean - 1.0) < 3.0 * rec.stderr_);

  // poisson_gaussian(2): E Z_1([0,inf)) = 2 Phi(0) = 1
  const ReproductionLaw pg = parse_law("kind=poisson_gaussian mu=2 mean=0 sd=1");
  const EstimateRecord rec2 = mean_count(pg, 1.0, 1, 0.0, 100000, 8);
  CHECK(std::abs(rec2.mean - 1.0) < 3.0 * rec2.stderr_);

  // a far below the support recovers e^{n psi(0)} regardless of the tilt
  const ReproductionLaw fg = parse_law("kind=fixed_gaussian b=2 mean=0 sd=1");
  const EstimateRecord t1 = mean_count(fg, 0.7, 4, -1e10, 100000, 9);
  const EstimateRecord t2 = mean_count(fg, 1.3, 4, -1e10, 100000, 10);
  CHECK(std::abs(t1.mean - 16.0) < 3.0 * t1.stderr_);
  CHECK(std::abs(t2.mean - 16.0) < 3.0 * t2.stderr_);
}

TEST_CASE("asymptotic tail formula identities") {
  const CumulantReport cum = tilted_cumulants(parse_law("kind=fixed_gaussian b=2 mean=0 sd=1"), 1.5);
  const double sqrt_2pi = std::sqrt(2.0 * 3.141592653589793238462643);
  // y = 0 specialization
  const double p = asymptotic_tail(cum, 0.5, 100, 0.0);
  const double expect = 0.5 / (sqrt_2pi * std::sqrt(100.0) * 1.0 * 1.5) * std::exp(-100.0 * cum.rate);
  CHECK(p == doctest::Approx(expect).epsilon(1e-12));
  // doubling n: log changes by -rate*n - (1/2) log 2
  const double l1 = std::log(asymptotic_tail(cum, 0.5, 50, 0.0));
  const double l2 = std::log(asymptotic_tail(cum, 0.5, 100, 0.0));
  CHECK(l2 - l1 == doctest::Approx(-50.0 * cum.rate - 0.5 * std::log(2.0)).epsilon(1e-9));
  CHECK_THROWS_AS(asymptotic_tail(cum, 0.0, 10, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(asymptotic_tail(cum, 1.5, 10, 0.0), std::invalid_argument);
}

TEST_CASE("Galton-Watson survival recursion") {
  const std::vector<std::pair<std::uint64_t, Rational>> probs{{0, Rational(3, 5)},
                                                              {2, Rational(2, 5)}};
  CHECK(gw_survival_exact(probs, 0) == Rational(1));
  CHECK(gw_survival_exact(probs, 1) == Rational(2, 5));
  CHECK(gw_survival_exact(probs, 2) == Rational(32, 125));
  CHECK_THROWS_AS(gw_survival_exact({{0, Rational(1, 2)}}, 1), std::invalid_argument);

  // the double recursion matches the exact one where both apply
  for (int n : {1, 2, 8, 12}) {
    const double exact = to_double(gw_survival_exact(probs, n));
    CHECK(gw_survival({{0, 0.6}, {2, 0.4}}, n) == doctest::Approx(exact).epsilon(1e-12));
  }
  // subcritical decay rate approaches log of the mean offspring number
  const double s = gw_survival({{0, 0.6}, {2, 0.4}}, 200);
  CHECK(std::log(s) / 200.0 == doctest::Approx(std::log(0.8)).epsilon(0.02));
}

TEST_CASE("local-limit check: interval variant and lattice rejection") {
  const ReproductionLaw fg = parse_law("kind=fixed_gaussian b=2 mean=0 sd=1");
  const LltResult res = llt_check(fg, 1.5, 400, LltKind::interval, 0.5, 0.0, 100000, 11);
  CHECK(res.limit == doctest::Approx(0.5 / std::sqrt(2.0 * 3.14159265358979)).epsilon(1e-9));
  CHECK(std::abs(res.estimate.mean - res.limit) < 0.05 * res.limit + 3.0 * res.estimate.stderr_);
  CHECK_THROWS_WITH_AS(llt_check(c2pm1(), 1.0, 10, LltKind::exp_tail, 0.0, 0.0, 100, 1),
                       doctest::Contains("(as4)"), std::runtime_error);
}

TEST_CASE("rate regression rejects boundary speeds") {
  const ReproductionLaw mix = parse_law("kind=mixed_gaussian sd=1\nprob = 0 0.6; prob = 2 0.4");
  CHECK_THROWS_WITH(ldp_rate(mix, -1.0, {5, 10}, 100, 1),
                    "x outside interior large-deviations regime");
}

TEST_CASE("spinal replica weights aggregate a bias certificate under pruning") {
  // harsh pruning on a supercritical law must surface in bias_bound, not hide
  const ReproductionLaw fg = parse_law("kind=fixed_gaussian b=2 mean=0 sd=1");
  SpinalOptions rough;
  rough.prune_delta = 1e-2;
  const EstimateRecord rec = spinal_tail(fg, 1.5, 12, 0.0, 3000, 13, rough);
  CHECK(rec.bias_bound > 0.0);
  SpinalOptions tight;
  tight.prune_delta = 1e-12;
  const EstimateRecord fine = spinal_tail(fg, 1.5, 12, 0.0, 3000, 13, tight);
  CHECK(fine.bias_bound < rec.bias_bound);
  CHECK(fine.bias_bound <= 1e-10 * std::max(1.0, fine.mean));
}
