#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "brwld/spine.hpp"

using namespace brwld;

namespace {

ReproductionLaw c2pm1() {
  return parse_law("kind=tabulated\nrow = 1/4 : 1 1\nrow = 1/2 : 1 -1\nrow = 1/4 : -1 -1\n");
}

const double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("size-biased brood satisfies its defining identity") {
  // E f(L_hat, xi) = E sum_k e^{theta V(k) - psi} f(Z_1, k), testable exactly
  // for a tabulated law by a finite sum
  const ReproductionLaw law = c2pm1();
  const double theta = 1.0;
  const double psi = log_laplace(law, theta);
  const SizeBiasedSampler sampler(law, theta);

  struct F {
    const char* name;
    double (*eval)(const SizeBiasedBrood&);
  };
  const F fs[] = {
      {"count", [](const SizeBiasedBrood& b) { return static_cast<double>(b.displacements.size()); }},
      {"sum exp", [](const SizeBiasedBrood& b) {
         double s = 0.0;
         for (const double d : b.displacements) s += std::exp(d);
         return s;
       }},
      {"max", [](const SizeBiasedBrood& b) {
         double m = -1e300;
         for (const double d : b.displacements) m = std::max(m, d);
         return m;
       }},
  };

  for (const auto& f : fs) {
    CAPTURE(f.name);
    // exact finite sum over (row, spine child)
    double exact = 0.0;
    for (const auto& row : law.rows)
      for (std::size_t k = 0; k < row.disp_d.size(); ++k) {
        SizeBiasedBrood b;
        b.displacements = row.disp_d;
        b.spine_index = k;
        exact += row.prob_d * std::exp(theta * row.disp_d[k] - psi) * f.eval(b);
      }
    Stream stream = derive_stream(31, 0);
    const int n = 100000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = f.eval(sampler.sample(stream));
      s1 += v;
      s2 += v * v;
    }
    const double mean = s1 / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::abs(mean - exact) < 3.0 * se + 1e-12);
  }
}

TEST_CASE("spine child of the gaussian pair law has the tilted mean") {
  const ReproductionLaw law = parse_law("kind=fixed_gaussian b=2 mean=0 sd=1");
  const SizeBiasedSampler sampler(law, 1.5);
  Stream stream = derive_stream(32, 0);
  const int n = 50000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const SizeBiasedBrood b = sampler.sample(stream);
    REQUIRE(b.displacements.size() == 2);
    s += b.displacements[b.spine_index];
  }
  // E S_1 = psi'(1.5) = 1.5
  CHECK(std::abs(s / n - 1.5) < 3.0 * std::sqrt(1.0 / n));
}

TEST_CASE("poisson family keeps a Poisson non-spine count") {
  const ReproductionLaw law = parse_law("kind=poisson_gaussian mu=2 mean=0 sd=1");
  const SizeBiasedSampler sampler(law, 1.0);
  Stream stream = derive_stream(33, 0);
  const int n = 50000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k = static_cast<double>(sampler.sample(stream).displacements.size()) - 1.0;
    s += k;
    s2 += k * k;
  }
  const double mean = s / n;
  CHECK(std::abs(mean - 2.0) < 3.0 * std::sqrt(2.0 / n));
  CHECK(std::abs((s2 / n - mean * mean) - 2.0) < 0.1);   // Poisson variance = mu
}

TEST_CASE("tilted walk step has the advertised cumulants") {
  const ReproductionLaw law = c2pm1();
  const CumulantReport cum = tilted_cumulants(law, 1.0);
  const SizeBiasedSampler sampler(law, 1.0);
  Stream stream = derive_stream(34, 0);
  const int n = 100000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sampler.spine_step(stream);
    s1 += x;
    s2 += x * x;
  }
  const double mean = s1 / n;
  const double var = s2 / n - mean * mean;
  CHECK(std::abs(mean - cum.psi_prime) < 3.0 * std::sqrt(cum.sigma2 / n));
  CHECK(std::abs(var - cum.sigma2) < 0.02);
}

TEST_CASE("auxiliary process at n=0 is the unit mass at the origin") {
  AuxiliaryOptions opt;
  opt.n = 0;
  opt.window = kInf;
  const AuxiliaryRealization r = build_auxiliary(c2pm1(), 1.0, opt, derive_stream(35, 0));
  CHECK(r.count_at_zero == 1);
  CHECK(r.count_above_zero == 0);
  CHECK(r.bar_count == 0);
  CHECK(r.s_n == 0.0);
  REQUIRE(r.atoms.atoms.size() == 1);
  CHECK(r.atoms.atoms[0].x == 0.0);
  CHECK(r.atoms.atoms[0].mult == 1);
}

TEST_CASE("single-child law never grows sibling atoms") {
  const ReproductionLaw single = parse_law("kind=tabulated\nrow = 1 : 1");
  AuxiliaryOptions opt;
  opt.n = 10;
  opt.window = kInf;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const AuxiliaryRealization r = build_auxiliary(single, 1.0, opt, derive_stream(36, i));
    CHECK(r.atoms.total_mass() == 1);
    CHECK(r.count_at_zero == 1);
    CHECK(r.count_above_zero == 0);
    CHECK(r.s_n == doctest::Approx(10.0));
  }
}

TEST_CASE("one-generation sibling atom has the convolution law") {
  // n=1: exactly one sibling atom at b_1(i) - S_1, i.e. N(0,1) minus an
  // independent N(1.5,1): mean -1.5, variance 2
  const ReproductionLaw law = parse_law("kind=fixed_gaussian b=2 mean=0 sd=1");
  AuxiliaryOptions opt;
  opt.n = 1;
  opt.window = kInf;
  const int n = 20000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const AuxiliaryRealization r = build_auxiliary(law, 1.5, opt, derive_stream(37, i));
    REQUIRE(r.atoms.total_mass() == 2);
    double sib = 0.0;
    for (const auto& a : r.atoms.atoms)
      if (a.x != 0.0) sib = a.x;
    s1 += sib;
    s2 += sib * sib;
  }
  const double mean = s1 / n;
  const double var = s2 / n - mean * mean;
  CHECK(std::abs(mean + 1.5) < 3.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(var - 2.0) < 0.1);
}

TEST_CASE("atom multiset grows monotonically in n for a fixed stream") {
  const ReproductionLaw mix = parse_law("kind=mixed_gaussian sd=1\nprob = 0 0.6; prob = 2 0.4");
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    const Stream stream = derive_stream(38, rep);
    std::vector<double> prev;
    for (int n = 0; n <= 12; n += 3) {
      AuxiliaryOptions opt;
      opt.n = n;
      opt.window = kInf;
      opt.prune_delta = 0.0;
      const AuxiliaryRealization r = build_auxiliary(mix, 1.0, opt, stream);
      std::vector<double> cur;
      for (const auto& a : r.atoms.atoms)
        for (std::uint64_t m = 0; m < a.mult; ++m) cur.push_back(a.x);
      // every atom of the shallower process must recur in the deeper one
      std::vector<double> pool = cur;
      for (const double x : prev) {
        auto it = std::find(pool.begin(), pool.end(), x);
        REQUIRE(it != pool.end());
        pool.erase(it);
      }
      prev = std::move(cur);
    }
  }
}

TEST_CASE("lattice laws produce exact ties at the origin") {
  const ReproductionLaw law = c2pm1();
  AuxiliaryOptions opt;
  opt.n = 6;
  opt.window = kInf;
  opt.prune_delta = 0.0;
  opt.cap = 100000;
  bool saw_tie = false;
  for (std::uint64_t i = 0; i < 2000; ++i) {
    const AuxiliaryRealization r = build_auxiliary(law, 1.0, opt, derive_stream(39, i));
    REQUIRE(r.valid);
    CHECK(r.count_at_zero >= 1);
    CHECK(r.bar_count <= r.count_at_zero - 1);
    CHECK(r.prune_bias_bound == 0.0);
    // measure bookkeeping is consistent with the counters
    std::uint64_t at = 0, above = 0;
    for (const auto& a : r.atoms.atoms) {
      if (a.ticks == 0) at += a.mult;
      if (a.ticks > 0) above += a.mult;
    }
    CHECK(at == r.count_at_zero);
    CHECK(above == r.count_above_zero);
    if (r.count_at_zero >= 2) saw_tie = true;
  }
  CHECK(saw_tie);
}

TEST_CASE("stabilization diagnostics") {
  const ReproductionLaw single = parse_law("kind=tabulated\nrow = 1 : 1");
  std::vector<AuxiliaryRealization> rs;
  AuxiliaryOptions opt;
  opt.n = 10;
  opt.window = kInf;
  for (std::uint64_t i = 0; i < 5; ++i)
    rs.push_back(build_auxiliary(single, 1.0, opt, derive_stream(40, i)));
  CHECK(stabilization_fraction(rs, 2, 0.1) == doctest::Approx(1.0));

  // a window that cannot certify the event is rejected
  std::vector<AuxiliaryRealization> narrow;
  opt.window = 0.5;
  narrow.push_back(build_auxiliary(single, 1.0, opt, derive_stream(40, 99)));
  CHECK_THROWS_WITH(stabilization_fraction(narrow, 2, 0.1),
                    "A-event undecidable at this window");
}
