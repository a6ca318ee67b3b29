#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <vector>

#include "brwld/harness.hpp"
#include "brwld/rng.hpp"

using namespace brwld;

namespace {

std::vector<Partial> synthetic_partials(std::uint64_t seed, int blocks, int per_block) {
  std::vector<Partial> parts;
  Stream s = derive_stream(seed, 0);
  for (int b = 0; b < blocks; ++b) {
    Partial p;
    p.index = static_cast<std::uint64_t>(b);
    for (int i = 0; i < per_block; ++i) p.add(s.normal(1.0, 3.0));
    parts.push_back(p);
  }
  return parts;
}

}  // namespace

TEST_CASE("aggregate of a single partial is the identity") {
  Partial p;
  p.index = 0;
  p.add(2.0);
  p.add(4.0);
  p.add(6.0);
  const EstimateRecord rec = aggregate({p});
  CHECK(rec.mean == doctest::Approx(4.0));
  CHECK(rec.replicas == 3);
  CHECK(rec.stderr_ == doctest::Approx(2.0 / std::sqrt(3.0)));
}

TEST_CASE("aggregate is permutation-invariant bit-exactly") {
  const auto parts = synthetic_partials(11, 9, 100);
  const EstimateRecord base = aggregate(parts);
  std::vector<Partial> shuffled{parts[8], parts[3], parts[0], parts[5], parts[1],
                                parts[7], parts[2], parts[6], parts[4]};
  const EstimateRecord other = aggregate(shuffled);
  CHECK(base.mean == other.mean);
  CHECK(base.stderr_ == other.stderr_);
  CHECK(base.replicas == other.replicas);
}

TEST_CASE("block merging matches the direct whole-sample computation") {
  const auto parts = synthetic_partials(7, 2, 500);
  const EstimateRecord rec = aggregate(parts);

  // recompute naively from the same draws
  Stream s = derive_stream(7, 0);
  std::vector<double> xs(1000);
  for (auto& x : xs) x = s.normal(1.0, 3.0);
  double mean = 0.0;
  for (const double x : xs) mean += x;
  mean /= 1000.0;
  double m2 = 0.0;
  for (const double x : xs) m2 += (x - mean) * (x - mean);
  const double se = std::sqrt(m2 / 999.0 / 1000.0);

  CHECK(rec.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(rec.stderr_ == doctest::Approx(se).epsilon(1e-12));
}

TEST_CASE("run_replicas counts invalid replicas and derives per-index streams") {
  const EstimateRecord rec = run_replicas(3, 5000, [](Stream& stream, std::uint64_t i) {
    ReplicaOutcome out;
    out.value = stream.uniform();
    out.valid = (i % 10) != 0;   // every tenth replica invalid
    return out;
  });
  CHECK(rec.replicas == 4500);
  CHECK(rec.invalid_replicas == 500);
  CHECK(std::abs(rec.mean - 0.5) < 5.0 * rec.stderr_);
}

TEST_CASE("thread count changes speed only, never the result") {
  auto fn = [](Stream& stream, std::uint64_t) {
    ReplicaOutcome out;
    out.value = stream.normal();
    return out;
  };
  setenv("BRWLD_THREADS", "1", 1);
  const EstimateRecord one = run_replicas(99, 10000, fn);
  setenv("BRWLD_THREADS", "4", 1);
  const EstimateRecord four = run_replicas(99, 10000, fn);
  unsetenv("BRWLD_THREADS");
  CHECK(one.mean == four.mean);
  CHECK(one.stderr_ == four.stderr_);
}

TEST_CASE("config digest is stable and discriminating") {
  const auto d1 = config_digest("theta=1.5;n=100");
  const auto d2 = config_digest("theta=1.5;n=100");
  const auto d3 = config_digest("theta=1.5;n=101");
  CHECK(d1 == d2);
  CHECK(d1 != d3);
}
