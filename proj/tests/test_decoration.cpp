#include "doctest.h"

#include <cmath>

#include "brwld/decoration.hpp"

using namespace brwld;

TEST_CASE("single-child law decorates with the bare origin atom") {
  const ReproductionLaw single = parse_law("kind=tabulated\nrow = 1 : 1");
  const DecorationBatch batch = sample_decoration(single, 1.0, 15, 50, 5.0, 21);
  CHECK(batch.acceptance_rate == 1.0);
  REQUIRE(batch.samples.size() == 50);
  for (const auto& s : batch.samples) {
    CHECK(s.atoms.total_mass() == 1);
    CHECK(s.atoms.atoms[0].x == 0.0);
  }
}

TEST_CASE("window zero collapses samples and raises the shape flag") {
  const ReproductionLaw mix = parse_law("kind=mixed_gaussian sd=1\nprob = 1 0.7; prob = 2 0.3");
  const DecorationBatch batch = sample_decoration(mix, 1.1, 10, 30, 0.0, 22);
  CHECK(batch.window_too_small);
  for (const auto& s : batch.samples) {
    CHECK(s.atoms.total_mass() == 1);
    CHECK(s.atoms.atoms[0].x == 0.0);
  }
}

TEST_CASE("no decoration sample carries mass above the origin") {
  const ReproductionLaw mix = parse_law("kind=mixed_gaussian sd=1\nprob = 1 0.7; prob = 2 0.3");
  const DecorationBatch batch = sample_decoration(mix, 1.1, 15, 100, 8.0, 23);
  for (const auto& s : batch.samples) {
    REQUIRE(!s.atoms.empty());
    for (const auto& a : s.atoms.atoms) CHECK(a.x <= 0.0);
    CHECK(s.atoms.mass_at(0.0) == 1);
  }
}

TEST_CASE("acceptance rate agrees with the indicator estimate of C(theta)") {
  const ReproductionLaw mix = parse_law("kind=mixed_gaussian sd=1\nprob = 1 0.7; prob = 2 0.3");
  const DecorationBatch batch = sample_decoration(mix, 1.1, 15, 400, 8.0, 24);
  const CThetaResult ind = c_theta(mix, 1.1, 15, 4000, CThetaVariant::indicator, 25);
  const double comb = std::sqrt(batch.acceptance_stderr * batch.acceptance_stderr +
                                ind.estimate.stderr_ * ind.estimate.stderr_);
  CHECK(std::abs(batch.acceptance_rate - ind.estimate.mean) < 3.0 * comb);
}

TEST_CASE("weighted KS distance vanishes on a perfect quantile grid") {
  std::vector<WeightedSample> samples;
  const double theta = 1.5;
  const int m = 2000;
  for (int i = 0; i < m; ++i) {
    const double u = (i + 0.5) / m;
    samples.push_back({-std::log(1.0 - u) / theta, 1.0});
  }
  const double d = weighted_ks(samples, [&](double v) { return -std::expm1(-theta * v); });
  CHECK(d < 1.0 / m + 1e-9);
  CHECK_THROWS_AS(weighted_ks(std::vector<WeightedSample>{}, [](double) { return 0.0; }),
                  std::invalid_argument);
}

TEST_CASE("deterministic walk overshoot has constant weights") {
  const ReproductionLaw single = parse_law("kind=tabulated\nrow = 1 : 1");
  const OvershootResult res = conditioned_overshoot(single, 1.0, 8, 200, 26);
  REQUIRE(!res.samples.empty());
  for (const auto& s : res.samples) {
    CHECK(s.value == doctest::Approx(0.0));
    CHECK(s.weight == doctest::Approx(1.0));
  }
}

TEST_CASE("permutation test on identical and trivial inputs") {
  const ReproductionLaw mix = parse_law("kind=mixed_gaussian sd=1\nprob = 1 0.7; prob = 2 0.3");
  const DecorationBatch batch = sample_decoration(mix, 1.1, 10, 80, 8.0, 27);
  std::vector<PointMeasure> ms;
  for (const auto& s : batch.samples) ms.push_back(s.atoms);

  const BumpSpec phi = BumpSpec::triangle(-2.0, -1.0, 0.0);
  const LaplaceCompareReport same = laplace_compare(ms, ms, phi, 500, derive_stream(28, 0));
  CHECK(same.mean_a == same.mean_b);
  CHECK(same.p_value == doctest::Approx(1.0));

  // a zero test function sees every measure as empty
  const BumpSpec zero({{-1.0, 0.0}, {0.0, 0.0}});
  const LaplaceCompareReport z = laplace_compare(ms, ms, zero, 10, derive_stream(28, 1));
  CHECK(z.mean_a == 1.0);
  CHECK(z.mean_b == 1.0);

  CHECK_THROWS_AS(laplace_compare({}, ms, phi, 10, derive_stream(28, 2)),
                  std::invalid_argument);
}

TEST_CASE("atom-count profile edge cases") {
  const ReproductionLaw mix = parse_law("kind=mixed_gaussian sd=1\nprob = 0 0.6; prob = 2 0.4");
  const auto prof = atom_count_profile(mix, 1.0, {0, 5}, 500, 29);
  REQUIRE(prof.size() == 2);
  CHECK(prof[0].mean == 1.0);   // n=0 always the bare origin
  CHECK(prof[0].stderr_ == 0.0);
  CHECK(prof[1].mean > 1.0);

  const ReproductionLaw super = parse_law("kind=fixed_gaussian b=2 mean=0 sd=1");
  CHECK_THROWS_WITH(atom_count_profile(super, 1.0, {5}, 10, 30),
                    "profile requires subcritical/critical subtrees");
}

TEST_CASE("bump functions interpolate piecewise linearly") {
  const BumpSpec phi = BumpSpec::triangle(-2.0, -1.0, 0.0, 4.0);
  CHECK(phi(-3.0) == 0.0);
  CHECK(phi(-2.0) == 0.0);
  CHECK(phi(-1.0) == 4.0);
  CHECK(phi(-1.5) == doctest::Approx(2.0));
  CHECK(phi(-0.25) == doctest::Approx(1.0));
  CHECK(phi(1.0) == 0.0);
  CHECK_THROWS_AS(BumpSpec({{0.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(BumpSpec({{0.0, 1.0}, {-1.0, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(BumpSpec({{0.0, -1.0}, {1.0, 0.0}}), std::invalid_argument);

  PointMeasure mu = make_measure({{-1.5, 0, 1}, {-1.0, 0, 2}, {0.5, 0, 1}}, false);
  CHECK(inner(mu, phi) == doctest::Approx(2.0 + 8.0));
}
