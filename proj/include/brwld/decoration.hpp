// Rejection sampling of the decoration point process (the law of the
// auxiliary process conditioned on no mass above 0 and no lexicographic
// ties), the conditioned-overshoot comparison against Exp(theta), a
// permutation test on Laplace functionals, and atom-count finiteness
// diagnostics.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "brwld/estimators.hpp"
#include "brwld/point_measure.hpp"
#include "brwld/reproduction.hpp"
#include "brwld/rng.hpp"
#include "brwld/spine.hpp"

namespace brwld {

struct DecorationSample {
  PointMeasure atoms;            // supported in [-W, 0], atom at 0
  std::uint64_t replica_index = 0;
};

struct DecorationBatch {
  std::vector<DecorationSample> samples;
  double acceptance_rate = 0.0;  // itself an estimate of C(theta), indicator variant
  double acceptance_stderr = 0.0;
  std::uint64_t attempts = 0;
  std::uint64_t invalid = 0;
  bool window_too_small = false; // window 0 collapses every sample to delta_0
};

// Draws decoration point processes: realizations of the auxiliary process
// accepted on {no atom above 0, no tie left of the spine}.  With a finite
// `condition_threshold` a, the sample is additionally tilted by
// e^{-theta (S_n - a)} 1{S_n >= a} via a secondary rejection; that is the
// exact law of the extremal process seen from the maximum, conditioned on
// M_n >= a (for non-lattice laws, where the maximizer is a.s. unique).
inline DecorationBatch sample_decoration(
    const ReproductionLaw& law, double theta, int n_max, std::uint64_t target_accepted,
    double window, std::uint64_t seed, const SpinalOptions& sopt = {},
    double condition_threshold = -std::numeric_limits<double>::infinity()) {
  if (target_accepted == 0)
    throw std::invalid_argument("sample_decoration: target_accepted must be positive");
  AuxiliaryOptions opt;
  opt.n = n_max;
  opt.window = window;
  opt.prune_delta = sopt.prune_delta;
  opt.cap = sopt.cap;
  opt.stop_on_positive = true;   // rejected realizations need no full atom list
  opt.record_gen_max = false;
  opt.min_s_n = condition_threshold;

  DecorationBatch batch;
  batch.window_too_small = window == 0.0;
  std::uint64_t index = 0;
  while (batch.samples.size() < target_accepted) {
    Stream stream = derive_stream(seed, index);
    const AuxiliaryRealization r = build_auxiliary(law, theta, opt, stream);
    ++index;
    ++batch.attempts;
    if (!r.valid) {
      ++batch.invalid;
      continue;
    }
    if (r.s_n < condition_threshold) continue;
    if (std::isfinite(condition_threshold) &&
        stream.child(0).uniform() >= std::exp(-theta * (r.s_n - condition_threshold)))
      continue;   // exponential tilt of the overshoot, by rejection
    if (!r.aborted_positive && r.count_above_zero == 0 && r.bar_count == 0) {
      DecorationSample s;
      s.atoms = r.atoms;
      s.replica_index = index - 1;
      batch.samples.push_back(std::move(s));
    }
    if (batch.attempts >= 1'000'000 &&
        static_cast<double>(batch.samples.size()) < 1e-4 * static_cast<double>(batch.attempts))
      throw std::runtime_error(
          "sample_decoration: acceptance rate below 1e-4 after 1e6 attempts (accepted " +
          std::to_string(batch.samples.size()) + ", invalid " + std::to_string(batch.invalid) + ")");
  }
  const double p = static_cast<double>(batch.samples.size()) / static_cast<double>(batch.attempts);
  batch.acceptance_rate = p;
  batch.acceptance_stderr = std::sqrt(p * (1.0 - p) / static_cast<double>(batch.attempts));
  return batch;
}

struct WeightedSample {
  double value = 0.0;
  double weight = 0.0;
};

struct OvershootResult {
  std::vector<WeightedSample> samples;   // M_n - n psi' conditioned on >= 0, importance-weighted
  double ks_distance = 0.0;              // weighted KS against Exp(theta)
  double weighted_mean = 0.0;
  double weighted_stderr = 0.0;
  std::uint64_t invalid = 0;
};

// Weighted one-sample KS distance of (value, weight) pairs against the cdf F.
template <class Cdf>
double weighted_ks(std::vector<WeightedSample> samples, Cdf&& cdf) {
  if (samples.empty()) throw std::invalid_argument("weighted_ks: empty sample");
  std::sort(samples.begin(), samples.end(),
            [](const WeightedSample& a, const WeightedSample& b) { return a.value < b.value; });
  double total = 0.0;
  for (const auto& s : samples) total += s.weight;
  double acc = 0.0;
  double d = 0.0;
  for (const auto& s : samples) {
    const double f = cdf(s.value);
    d = std::max(d, std::abs(acc / total - f));          // just below the step
    acc += s.weight;
    d = std::max(d, std::abs(acc / total - f));          // just above the step
  }
  return d;
}

inline OvershootResult conditioned_overshoot(const ReproductionLaw& law, double theta, int n,
                                             std::uint64_t replicas, std::uint64_t seed,
                                             const SpinalOptions& sopt = {}) {
  const double psi_prime = tilted_cumulants(law, theta).psi_prime;
  AuxiliaryOptions opt;
  opt.n = n;
  opt.window = 0.0;
  opt.prune_delta = sopt.prune_delta;
  opt.cap = sopt.cap;
  opt.stop_on_positive = true;
  opt.record_gen_max = false;

  OvershootResult res;
  for (std::uint64_t i = 0; i < replicas; ++i) {
    Stream stream = derive_stream(seed, i);
    const AuxiliaryRealization r = build_auxiliary(law, theta, opt, stream);
    if (!r.valid) {
      ++res.invalid;
      continue;
    }
    const double v = r.s_n - static_cast<double>(n) * psi_prime;
    if (r.aborted_positive || r.count_above_zero != 0 || v < 0.0) continue;
    res.samples.push_back({v, std::exp(-theta * v) / static_cast<double>(r.count_at_zero)});
  }
  if (res.samples.empty()) throw std::runtime_error("no accepted samples");

  double total = 0.0;
  for (const auto& s : res.samples) total += s.weight;
  double mean = 0.0;
  for (const auto& s : res.samples) mean += s.weight * s.value;
  mean /= total;
  // variance of the self-normalized estimator via the delta method
  double var = 0.0, wsq = 0.0;
  for (const auto& s : res.samples) {
    const double d = s.value - mean;
    var += s.weight * s.weight * d * d;
    wsq += s.weight * s.weight;
  }
  res.weighted_mean = mean;
  res.weighted_stderr = std::sqrt(var) / total;
  (void)wsq;
  res.ks_distance = weighted_ks(res.samples, [theta](double v) { return -std::expm1(-theta * v); });
  return res;
}

// Parametric null for the weighted KS statistic: values from the large-n
// proposal |N(0, sigma^2 n)|, weights e^{-theta v}, compared against the
// Exp(theta) target.  Returns the q-quantile over `resamples` statistics.
inline double overshoot_ks_null_quantile(double theta, double sigma, int n, std::size_t m,
                                         std::size_t resamples, double q, Stream stream) {
  const double scale = sigma * std::sqrt(static_cast<double>(n));
  std::vector<double> stats;
  stats.reserve(resamples);
  std::vector<WeightedSample> sample(m);
  for (std::size_t r = 0; r < resamples; ++r) {
    for (std::size_t i = 0; i < m; ++i) {
      const double v = std::abs(stream.normal(0.0, scale));
      sample[i] = {v, std::exp(-theta * v)};
    }
    stats.push_back(weighted_ks(sample, [theta](double v) { return -std::expm1(-theta * v); }));
  }
  std::sort(stats.begin(), stats.end());
  const auto idx = static_cast<std::size_t>(q * static_cast<double>(stats.size() - 1));
  return stats[idx];
}

struct LaplaceCompareReport {
  double mean_a = 0.0, stderr_a = 0.0;
  double mean_b = 0.0, stderr_b = 0.0;
  double p_value = 1.0;      // two-sided permutation p-value on the mean difference
  std::size_t permutations = 0;
};

// Two-sample permutation test on the Laplace functionals e^{-<mu, phi>}.
inline LaplaceCompareReport laplace_compare(const std::vector<PointMeasure>& samples_a,
                                            const std::vector<PointMeasure>& samples_b,
                                            const BumpSpec& phi, std::size_t permutations,
                                            Stream stream) {
  if (samples_a.empty() || samples_b.empty())
    throw std::invalid_argument("laplace_compare: empty sample set");
  std::vector<double> va, vb;
  va.reserve(samples_a.size());
  vb.reserve(samples_b.size());
  for (const auto& mu : samples_a) va.push_back(std::exp(-inner(mu, phi)));
  for (const auto& mu : samples_b) vb.push_back(std::exp(-inner(mu, phi)));

  auto stats = [](const std::vector<double>& v, double& mean, double& se) {
    mean = 0.0;
    for (const double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double m2 = 0.0;
    for (const double x : v) m2 += (x - mean) * (x - mean);
    se = v.size() > 1 ? std::sqrt(m2 / static_cast<double>(v.size() - 1) /
                                  static_cast<double>(v.size()))
                      : 0.0;
  };
  LaplaceCompareReport rep;
  stats(va, rep.mean_a, rep.stderr_a);
  stats(vb, rep.mean_b, rep.stderr_b);
  rep.permutations = permutations;

  const double observed = std::abs(rep.mean_a - rep.mean_b);
  std::vector<double> pooled = va;
  pooled.insert(pooled.end(), vb.begin(), vb.end());
  const std::size_t na = va.size();
  std::size_t hits = 0;
  for (std::size_t p = 0; p < permutations; ++p) {
    // Fisher-Yates prefix shuffle: a uniform size-na subset into the front
    for (std::size_t i = 0; i < na; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(stream.below(pooled.size() - i));
      std::swap(pooled[i], pooled[j]);
    }
    double sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < na; ++i) sa += pooled[i];
    for (std::size_t i = na; i < pooled.size(); ++i) sb += pooled[i];
    const double diff = std::abs(sa / static_cast<double>(na) -
                                 sb / static_cast<double>(pooled.size() - na));
    if (diff >= observed) ++hits;
  }
  rep.p_value = (static_cast<double>(hits) + 1.0) / (static_cast<double>(permutations) + 1.0);
  return rep;
}

struct AtomCountSummary {
  int n = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
  double median = 0.0;
  double p99 = 0.0;
  std::uint64_t invalid = 0;
};

// Total-atom-count distribution of the auxiliary process across a grid of n,
// with no window and no pruning: finite limits plateau, critical ones grow.
inline std::vector<AtomCountSummary> atom_count_profile(const ReproductionLaw& law, double theta,
                                                        const std::vector<int>& n_grid,
                                                        std::uint64_t replicas, std::uint64_t seed,
                                                        std::uint64_t cap = 10'000'000) {
  if (law.mean_count() > 1.0 + 1e-12)
    throw std::runtime_error("profile requires subcritical/critical subtrees");
  std::vector<AtomCountSummary> out;
  for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
    AuxiliaryOptions opt;
    opt.n = n_grid[gi];
    opt.window = std::numeric_limits<double>::infinity();
    opt.prune_delta = 0.0;
    opt.cap = cap;
    opt.record_gen_max = false;

    AtomCountSummary sum;
    sum.n = n_grid[gi];
    std::vector<double> counts;
    counts.reserve(replicas);
    const std::uint64_t grid_seed = detail::splitmix64_mix(seed ^ (0x9e3779b97f4a7c15ULL * (gi + 1)));
    for (std::uint64_t i = 0; i < replicas; ++i) {
      const AuxiliaryRealization r =
          build_auxiliary(law, theta, opt, derive_stream(grid_seed, i));
      if (!r.valid) {
        ++sum.invalid;
        continue;
      }
      counts.push_back(static_cast<double>(r.atoms.total_mass()));
    }
    if (counts.empty()) throw std::runtime_error("atom_count_profile: no valid realizations");
    double mean = 0.0;
    for (const double c : counts) mean += c;
    mean /= static_cast<double>(counts.size());
    double m2 = 0.0;
    for (const double c : counts) m2 += (c - mean) * (c - mean);
    sum.mean = mean;
    sum.stderr_ = counts.size() > 1
                      ? std::sqrt(m2 / static_cast<double>(counts.size() - 1) /
                                  static_cast<double>(counts.size()))
                      : 0.0;
    std::sort(counts.begin(), counts.end());
    sum.median = counts[counts.size() / 2];
    sum.p99 = counts[static_cast<std::size_t>(0.99 * static_cast<double>(counts.size() - 1))];
    out.push_back(sum);
  }
  return out;
}

}  // namespace brwld
