// Self-contained validation suite: eleven end-to-end checks of the library
// against exact enumeration, closed-form constants and internal consistency.
// Each criterion reports a pass/fail verdict with the measured numbers.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "brwld/decoration.hpp"
#include "brwld/estimators.hpp"
#include "brwld/report.hpp"
#include "brwld/reproduction.hpp"
#include "brwld/spine.hpp"
#include "brwld/tree_sim.hpp"

namespace brwld {

enum class Tier { fast, full };

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

namespace validate_detail {

// two-point lattice law: children (+1,+1) w.p. 1/4, (+1,-1) w.p. 1/2,
// (-1,-1) w.p. 1/4; psi(1) = log(2 cosh 1), psi'(1) = tanh 1
inline ReproductionLaw law_c2pm1() {
  return parse_law("kind=tabulated\nrow = 1/4 : 1 1\nrow = 1/2 : 1 -1\nrow = 1/4 : -1 -1\n");
}
inline ReproductionLaw law_fg2() { return parse_law("kind=fixed_gaussian b=2 mean=0 sd=1"); }
inline ReproductionLaw law_single() { return parse_law("kind=tabulated\nrow = 1 : 1\n"); }
inline ReproductionLaw law_mix64() {
  return parse_law("kind=mixed_gaussian mean=0 sd=1\nprob = 0 0.6\nprob = 2 0.4\n");
}
inline ReproductionLaw law_mix55() {
  return parse_law("kind=mixed_gaussian mean=0 sd=1\nprob = 0 0.5\nprob = 2 0.5\n");
}
// gently supercritical law for the naive-conditioning cross-check
inline ReproductionLaw law_mix73() {
  return parse_law("kind=mixed_gaussian mean=0 sd=1\nprob = 1 0.7\nprob = 2 0.3\n");
}

inline std::uint64_t scale(Tier tier, std::uint64_t full, std::uint64_t fast) {
  return tier == Tier::full ? full : fast;
}

struct Check {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (ok ? "  ok: " : "  FAIL: ") << what << "\n";
  }
};

template <class Fn>
CriterionResult timed(int id, const std::string& name, Fn&& fn) {
  CriterionResult res;
  res.id = id;
  res.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  Check chk;
  fn(chk);
  res.pass = chk.pass;
  res.detail = chk.detail.str();
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

inline std::string num(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

}  // namespace validate_detail

// 1. Spinal importance sampling is exactly unbiased: compare against the
//    enumeration oracle on the two-point lattice law.
inline CriterionResult criterion_1(Tier tier, std::uint64_t seed) {
  using namespace validate_detail;
  return timed(1, "spinal estimator matches exact enumeration", [&](Check& chk) {
    const ReproductionLaw law = law_c2pm1();
    const double psi_prime = tilted_cumulants(law, 1.0).psi_prime;
    const std::uint64_t reps = scale(tier, 100'000, 20'000);
    const struct { int n; double a; } cases[] = {{1, 1.0}, {2, 2.0}, {2, 0.0}};
    for (const auto& c : cases) {
      const double exact = to_double(enumerate_tail(law, c.n, Rational(BigInt(static_cast<long long>(c.a)))));
      const double y = c.a - static_cast<double>(c.n) * psi_prime;
      const EstimateRecord rec = spinal_tail(law, 1.0, c.n, y, reps, seed + static_cast<std::uint64_t>(c.n * 10 + static_cast<int>(c.a)));
      chk.require(std::abs(rec.mean - exact) <= 3.0 * rec.stderr_,
                  "P(M_" + std::to_string(c.n) + " >= " + num(c.a) + "): estimate " + num(rec.mean) +
                      " +- " + num(rec.stderr_) + " vs exact " + num(exact));
    }
  });
}

// 2. Galton-Watson survival: exact small-n values and the log-decay rate.
inline CriterionResult criterion_2(Tier, std::uint64_t) {
  using namespace validate_detail;
  return timed(2, "Galton-Watson survival recursion", [&](Check& chk) {
    const std::vector<std::pair<std::uint64_t, Rational>> probs{
        {0, Rational(3, 5)}, {2, Rational(2, 5)}};
    chk.require(gw_survival_exact(probs, 1) == Rational(2, 5), "survival(1) = 2/5");
    chk.require(gw_survival_exact(probs, 2) == Rational(32, 125), "survival(2) = 32/125 = 0.256");
    chk.require(gw_survival_exact(probs, 0) == Rational(1), "survival(0) = 1");
    // increments cancel the Yaglom constant, leaving the pure geometric decay
    const double s200 = gw_survival({{0, 0.6}, {2, 0.4}}, 200);
    const double s400 = gw_survival({{0, 0.6}, {2, 0.4}}, 400);
    const double rate = (std::log(s400) - std::log(s200)) / 200.0;
    const double target = std::log(0.8);
    chk.require(std::abs(rate - target) <= 0.01 * std::abs(target),
                "incremental log-survival rate = " + num(rate) + " vs log 0.8 = " + num(target));
  });
}

// 3. Local-limit scaling of the tilted walk at y = 0 and y = sigma sqrt(n).
inline CriterionResult criterion_3(Tier tier, std::uint64_t seed) {
  using namespace validate_detail;
  return timed(3, "local limit theorem scaling", [&](Check& chk) {
    const ReproductionLaw law = law_fg2();
    const std::uint64_t reps = scale(tier, 1'000'000, 100'000);
    const int n = 1000;
    const double ys[] = {0.0, std::sqrt(static_cast<double>(n))};  // sigma = 1
    for (const double y : ys) {
      const LltResult res = llt_check(law, 1.5, n, LltKind::exp_tail, 0.0, y, reps,
                                      seed + static_cast<std::uint64_t>(y));
      chk.require(std::abs(res.estimate.mean - res.limit) <= 0.05 * res.limit,
                  "y=" + num(y) + ": estimate " + num(res.estimate.mean) + " vs limit " +
                      num(res.limit));
    }
  });
}

// 4. The closed-form tail asymptotic agrees with the spinal estimator and the
//    agreement tightens with n.
inline CriterionResult criterion_4(Tier tier, std::uint64_t seed) {
  using namespace validate_detail;
  return timed(4, "tail asymptotic consistency over n", [&](Check& chk) {
    const ReproductionLaw law = law_fg2();
    const double theta = 1.5;
    const CumulantReport cum = tilted_cumulants(law, theta);
    const CThetaResult ct =
        c_theta(law, theta, 60, scale(tier, 100'000, 20'000), CThetaVariant::weighted, seed + 1);
    const double c_rel = ct.estimate.stderr_ / ct.estimate.mean;

    const int grid[] = {25, 50, 100, 200};
    std::vector<double> ratio, se;
    for (int i = 0; i < 4; ++i) {
      const EstimateRecord rec = spinal_tail(law, theta, grid[i], 0.0,
                                             scale(tier, 100'000, 20'000), seed + 10 + i);
      const double asym = asymptotic_tail(cum, ct.estimate.mean, grid[i], 0.0);
      const double r = rec.mean / asym;
      const double s = r * std::sqrt(std::pow(rec.stderr_ / rec.mean, 2) + c_rel * c_rel);
      ratio.push_back(r);
      se.push_back(s);
      chk.detail << "  n=" << grid[i] << ": ratio " << num(r) << " +- " << num(s) << "\n";
    }
    chk.require(ratio[3] - 3.0 * se[3] <= 1.1 && ratio[3] + 3.0 * se[3] >= 0.9,
                "n=200 ratio confidence interval meets [0.9, 1.1]");
    for (int i = 1; i < 4; ++i)
      chk.require(std::abs(ratio[i] - 1.0) <=
                      std::abs(ratio[i - 1] - 1.0) + 3.0 * (se[i] + se[i - 1]),
                  "|ratio-1| non-increasing up to noise at n=" + std::to_string(grid[i]));
  });
}

// 5. The decoration constant is strictly inside (0,1) for a genuinely
//    branching law, exactly 1 for the single-child law, and its two
//    estimator variants agree.
inline CriterionResult criterion_5(Tier tier, std::uint64_t seed) {
  using namespace validate_detail;
  return timed(5, "decoration constant bounds and degeneracy", [&](Check& chk) {
    const std::uint64_t reps = scale(tier, 100'000, 20'000);
    const CThetaResult w =
        c_theta(law_fg2(), 1.5, 60, reps, CThetaVariant::weighted, seed + 1);
    const CThetaResult ind =
        c_theta(law_fg2(), 1.5, 60, reps, CThetaVariant::indicator, seed + 2);
    chk.require(w.estimate.mean - 3.0 * w.estimate.stderr_ > 0.0 &&
                    w.estimate.mean + 3.0 * w.estimate.stderr_ < 1.0,
                "C estimate " + num(w.estimate.mean) + " +- " + num(w.estimate.stderr_) +
                    " strictly inside (0,1)");
    const double comb = std::sqrt(w.estimate.stderr_ * w.estimate.stderr_ +
                                  ind.estimate.stderr_ * ind.estimate.stderr_);
    chk.require(std::abs(w.estimate.mean - ind.estimate.mean) <= 3.0 * comb,
                "weighted " + num(w.estimate.mean) + " vs indicator " + num(ind.estimate.mean));
    const CThetaResult one = c_theta(law_single(), 1.0, 20, 200, CThetaVariant::weighted, seed + 3);
    chk.require(one.estimate.mean == 1.0 && one.estimate.stderr_ == 0.0,
                "single-child law gives exactly 1");
  });
}

// 6. Large-deviations rate: regression slope of -log P against n matches the
//    Legendre transform.
inline CriterionResult criterion_6(Tier tier, std::uint64_t seed) {
  using namespace validate_detail;
  return timed(6, "large-deviations rate regression", [&](Check& chk) {
    const std::vector<int> grid{20, 40, 60, 80};
    const std::uint64_t reps = scale(tier, 100'000, 20'000);
    {
      const LdpRateResult r = ldp_rate(law_fg2(), 1.5, grid, reps, seed + 1);
      chk.require(std::abs(r.slope - r.psi_star) <= 0.10 * r.psi_star,
                  "fixed-pair gaussian x=1.5: slope " + num(r.slope) + " vs psi* " +
                      num(r.psi_star));
    }
    {
      const LdpRateResult r = ldp_rate(law_mix64(), 0.5, grid, reps, seed + 2);
      chk.require(std::abs(r.slope - r.psi_star) <= 0.10 * r.psi_star,
                  "subcritical mixture x=0.5: slope " + num(r.slope) + " vs psi* " +
                      num(r.psi_star));
    }
  });
}

// 7. Conditioned overshoot converges to Exp(theta): weighted mean and
//    weighted KS distance against a bootstrap-calibrated critical value.
inline CriterionResult criterion_7(Tier tier, std::uint64_t seed) {
  using namespace validate_detail;
  return timed(7, "overshoot limit law", [&](Check& chk) {
    const double theta = 1.5;
    const int n = 100;
    const OvershootResult res =
        conditioned_overshoot(law_fg2(), theta, n, scale(tier, 100'000, 20'000), seed + 1);
    chk.require(std::abs(res.weighted_mean - 1.0 / theta) <= 3.0 * res.weighted_stderr,
                "weighted mean overshoot " + num(res.weighted_mean) + " +- " +
                    num(res.weighted_stderr) + " vs 1/theta = " + num(1.0 / theta));
    const double crit = overshoot_ks_null_quantile(
        theta, 1.0, n, res.samples.size(), scale(tier, 300, 100), 0.99,
        derive_stream(seed, 0xb007));
    chk.require(res.ks_distance < crit, "weighted KS " + num(res.ks_distance) +
                                            " below 99% null quantile " + num(crit) + " (" +
                                            std::to_string(res.samples.size()) + " samples)");
  });
}

// 8. Decoration samples match naively conditioned extremal processes in
//    Laplace functional, at a desk-scale n where naive conditioning works.
//    With the threshold tilt the two laws are identical at finite n, so this
//    is an exact identity check, not an asymptotic one.
inline CriterionResult criterion_8(Tier tier, std::uint64_t seed) {
  using namespace validate_detail;
  return timed(8, "decoration vs conditioned extremal process", [&](Check& chk) {
    const ReproductionLaw law = law_mix73();
    const double theta = 1.1;
    const int n = 12;
    const double threshold = static_cast<double>(n) * tilted_cumulants(law, theta).psi_prime;
    const std::size_t target = scale(tier, 600, 200);

    const DecorationBatch batch =
        sample_decoration(law, theta, n, target, 10.0 / theta, seed + 1, {}, threshold);
    std::vector<PointMeasure> deco;
    deco.reserve(batch.samples.size());
    for (const auto& s : batch.samples) deco.push_back(s.atoms);

    std::vector<PointMeasure> cond;
    std::uint64_t attempts = 0;
    for (std::uint64_t i = 0; cond.size() < target; ++i) {
      if (++attempts > 20'000'000) throw std::runtime_error("conditioned sampler: acceptance too low");
      const auto gens = run_forward(law, n, 1'000'000, derive_stream(seed + 2, i));
      const auto& last = gens.back();
      if (last.capped || !last.m_n || *last.m_n < threshold) continue;
      cond.push_back(extremal_process(last));
    }
    chk.detail << "  naive acceptance " << num(static_cast<double>(target) / static_cast<double>(attempts))
               << ", decoration acceptance " << num(batch.acceptance_rate) << "\n";

    const BumpSpec bumps[] = {BumpSpec::triangle(-1.5, -0.75, 0.0),
                              BumpSpec::triangle(-3.0, -2.0, -1.0),
                              BumpSpec::triangle(-2.2, -1.2, -0.3, 2.0)};
    for (int b = 0; b < 3; ++b) {
      const LaplaceCompareReport rep = laplace_compare(
          deco, cond, bumps[b], scale(tier, 2000, 500), derive_stream(seed, 0xface + static_cast<std::uint64_t>(b)));
      chk.require(rep.p_value >= 0.01,
                  "bump " + std::to_string(b) + ": permutation p = " + num(rep.p_value) +
                      " (means " + num(rep.mean_a) + " vs " + num(rep.mean_b) + ")");
    }
  });
}

// 9. Atom-count finiteness: plateau for subcritical subtrees, strict growth
//    for critical ones.
inline CriterionResult criterion_9(Tier tier, std::uint64_t seed) {
  using namespace validate_detail;
  return timed(9, "atom-count plateau vs growth", [&](Check& chk) {
    const std::vector<int> grid{200, 400};
    const std::uint64_t reps = scale(tier, 3000, 500);
    {
      const auto prof = atom_count_profile(law_mix64(), 1.0, grid, reps, seed + 1);
      const double diff = prof[1].mean - prof[0].mean;
      const double comb = std::sqrt(prof[0].stderr_ * prof[0].stderr_ +
                                    prof[1].stderr_ * prof[1].stderr_);
      chk.require(std::abs(diff) < 3.0 * comb,
                  "subcritical: mean(400)-mean(200) = " + num(diff) + " within 3x" + num(comb));
    }
    {
      const auto prof = atom_count_profile(law_mix55(), 1.0, grid, reps, seed + 2);
      const double diff = prof[1].mean - prof[0].mean;
      const double comb = std::sqrt(prof[0].stderr_ * prof[0].stderr_ +
                                    prof[1].stderr_ * prof[1].stderr_);
      chk.require(diff > 3.0 * comb,
                  "critical: mean(400)-mean(200) = " + num(diff) + " exceeds 3x" + num(comb));
    }
  });
}

// 10. Martingale normalization, many-to-one tilt invariance, and the tilted
//     step cumulants.
inline CriterionResult criterion_10(Tier tier, std::uint64_t seed) {
  using namespace validate_detail;
  return timed(10, "martingale and many-to-one identities", [&](Check& chk) {
    const ReproductionLaw fg2 = law_fg2();
    {
      // below the critical tilt, where W_n has a finite second moment and the
      // sample mean of the martingale is well behaved
      const double theta = 0.5;
      const double psi = log_laplace(fg2, theta);
      const EstimateRecord rec =
          run_replicas(seed + 1, scale(tier, 10'000, 4'000), [&](Stream& stream, std::uint64_t) {
            ReplicaOutcome out;
            const auto gens = run_forward(fg2, 5, 1'000'000, stream);
            out.value = additive_martingale(gens.back(), theta, psi);
            return out;
          });
      chk.require(std::abs(rec.mean - 1.0) <= 3.0 * rec.stderr_,
                  "E W_5 = " + num(rec.mean) + " +- " + num(rec.stderr_) + " vs 1");
    }
    {
      const std::uint64_t reps = scale(tier, 100'000, 20'000);
      const EstimateRecord a = mean_count(fg2, 1.0, 5, -1e10, reps, seed + 2);
      const EstimateRecord b = mean_count(fg2, 1.2, 5, -1e10, reps, seed + 3);
      const double comb = std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_);
      chk.require(std::abs(a.mean - b.mean) <= 3.0 * comb,
                  "tilt invariance: theta=1 gives " + num(a.mean) + ", theta=1.2 gives " +
                      num(b.mean));
      chk.require(std::abs(a.mean - 32.0) <= 3.0 * a.stderr_, "mean count vs 2^5 = 32");
    }
    {
      const ReproductionLaw law = law_c2pm1();
      const CumulantReport cum = tilted_cumulants(law, 1.0);
      const SizeBiasedSampler spine(law, 1.0);
      Stream stream = derive_stream(seed, 0x57e9);
      const std::uint64_t N = scale(tier, 200'000, 50'000);
      double s1 = 0.0, s2 = 0.0, s4 = 0.0;
      std::vector<double> xs(N);
      for (auto& x : xs) {
        x = spine.spine_step(stream);
        s1 += x;
      }
      const double mean = s1 / static_cast<double>(N);
      for (const double x : xs) {
        const double d = x - mean;
        s2 += d * d;
        s4 += d * d * d * d;
      }
      const double var = s2 / static_cast<double>(N - 1);
      const double se_mean = std::sqrt(var / static_cast<double>(N));
      const double se_var = std::sqrt((s4 / static_cast<double>(N) - var * var) /
                                      static_cast<double>(N));
      chk.require(std::abs(mean - cum.psi_prime) <= 3.0 * se_mean,
                  "E S_1 = " + num(mean) + " vs psi' = " + num(cum.psi_prime));
      chk.require(std::abs(var - cum.sigma2) <= 3.0 * se_var,
                  "Var S_1 = " + num(var) + " vs sigma^2 = " + num(cum.sigma2));
    }
  });
}

// 11. Determinism: bit-identical reruns, byte-identical reports, and
//     permutation-invariant aggregation.
inline CriterionResult criterion_11(Tier, std::uint64_t seed) {
  using namespace validate_detail;
  return timed(11, "determinism and order independence", [&](Check& chk) {
    const ReproductionLaw law = law_c2pm1();
    const EstimateRecord a = spinal_tail(law, 1.0, 2, 0.0, 5000, seed);
    const EstimateRecord b = spinal_tail(law, 1.0, 2, 0.0, 5000, seed);
    chk.require(a.mean == b.mean && a.stderr_ == b.stderr_ && a.replicas == b.replicas &&
                    a.invalid_replicas == b.invalid_replicas && a.bias_bound == b.bias_bound,
                "rerun with one seed is bit-identical");

    const json cfg{{"law", "c2pm1"}, {"theta", 1.0}, {"n", 2}, {"replicas", 5000}};
    const std::string r1 = report_body(make_report("tail", cfg, estimate_json(a), json::object(), seed, 0.1));
    const std::string r2 = report_body(make_report("tail", cfg, estimate_json(b), json::object(), seed, 99.9));
    chk.require(r1 == r2, "report bodies byte-identical across timings");

    // synthetic blocks fed in two different arrival orders
    std::vector<Partial> parts;
    Stream stream = derive_stream(seed, 0xa99);
    for (std::uint64_t i = 0; i < 9; ++i) {
      Partial p;
      p.index = i;
      for (int j = 0; j < 100; ++j) p.add(stream.normal(0.5, 2.0));
      parts.push_back(p);
    }
    std::vector<Partial> shuffled{parts[4], parts[8], parts[0], parts[2], parts[6],
                                  parts[1], parts[7], parts[3], parts[5]};
    const EstimateRecord x = aggregate(parts);
    const EstimateRecord y = aggregate(shuffled);
    chk.require(x.mean == y.mean && x.stderr_ == y.stderr_ && x.replicas == y.replicas,
                "aggregation is permutation-invariant bit-exactly");
  });
}

inline CriterionResult run_criterion(int id, Tier tier, std::uint64_t seed) {
  switch (id) {
    case 1: return criterion_1(tier, seed);
    case 2: return criterion_2(tier, seed);
    case 3: return criterion_3(tier, seed);
    case 4: return criterion_4(tier, seed);
    case 5: return criterion_5(tier, seed);
    case 6: return criterion_6(tier, seed);
    case 7: return criterion_7(tier, seed);
    case 8: return criterion_8(tier, seed);
    case 9: return criterion_9(tier, seed);
    case 10: return criterion_10(tier, seed);
    case 11: return criterion_11(tier, seed);
    default: throw std::invalid_argument("run_criterion: id must be 1..11");
  }
}

inline std::vector<CriterionResult> run_validate(Tier tier, std::uint64_t seed) {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= 11; ++id) out.push_back(run_criterion(id, tier, seed));
  return out;
}

}  // namespace brwld
