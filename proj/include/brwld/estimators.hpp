// Quantitative estimators: the spinal importance-sampling tail estimator,
// the decoration constant C(theta), many-to-one mean counts, the closed-form
// tail asymptotic, large-deviations rate regression, Galton-Watson survival
// and the local-limit scaling check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "brwld/harness.hpp"
#include "brwld/reproduction.hpp"
#include "brwld/rng.hpp"
#include "brwld/spine.hpp"
#include "brwld/tree_sim.hpp"

namespace brwld {

struct SpinalOptions {
  // pruning certificate threshold; the summed certificate is reported as
  // bias_bound on every estimate, so a looser default trades a recorded
  // ~1e-4-relative bound for orders-of-magnitude less work in the rare
  // replicas whose subtree cores explode
  double prune_delta = 1e-7;
  std::uint64_t cap = 1'000'000;
};

// Unbiased estimate of P(M_n >= n psi'(theta) + y) via the spinal
// change of measure: each replica contributes
//   e^{n psi - theta S_n} / D_n({0}) * 1{S_n - n psi' >= y, D_n((0,inf)) = 0}.
// Window 0 suffices: only the mass at {0} and above 0 enters the weight.
inline EstimateRecord spinal_tail(const ReproductionLaw& law, double theta, int n, double y,
                                  std::uint64_t replicas, std::uint64_t seed,
                                  const SpinalOptions& sopt = {}) {
  const double psi = log_laplace(law, theta);
  const double psi_prime = tilted_cumulants(law, theta).psi_prime;
  AuxiliaryOptions opt;
  opt.n = n;
  opt.window = 0.0;
  opt.prune_delta = sopt.prune_delta;
  opt.cap = sopt.cap;
  opt.stop_on_positive = true;
  opt.record_gen_max = false;
  // replicas whose spine misses the displacement target contribute exactly 0,
  // so their subtrees never need to be grown
  opt.min_s_n = static_cast<double>(n) * psi_prime + y;

  EstimateRecord rec = run_replicas(seed, replicas, [&](Stream& stream, std::uint64_t) {
    ReplicaOutcome out;
    const AuxiliaryRealization r = build_auxiliary(law, theta, opt, stream);
    if (!r.valid) {
      out.valid = false;
      return out;
    }
    const bool event = !r.aborted_positive && r.count_above_zero == 0 &&
                       r.s_n - static_cast<double>(n) * psi_prime >= y;
    if (event) {
      const double lw = static_cast<double>(n) * psi - theta * r.s_n -
                        std::log(static_cast<double>(r.count_at_zero));
      out.value = std::exp(lw);
      // pruning can only delete atoms above -W = 0, i.e. wrongly keep the
      // indicator at 1; the certificate bounds that probability
      out.bias = out.value * std::min(1.0, r.prune_bias_bound);
    }
    return out;
  });
  if (rec.replicas > 0) rec.bias_bound /= static_cast<double>(rec.replicas);  // mean scale
  return rec;
}

enum class CThetaVariant { weighted, indicator };

struct CThetaResult {
  EstimateRecord estimate;
  // stabilization diagnostic: quantiles of the last generation whose
  // subtrees contributed any atom (0.5, 0.9, 0.99, 0.999)
  int lcg_q50 = 0, lcg_q90 = 0, lcg_q99 = 0, lcg_q999 = 0;
  bool as1_ok = true;   // theta psi'(theta) > psi(theta); meaningless estimate otherwise
};

// C(theta) = E(1/D({0}) 1{D((0,inf))=0}) = P(D((0,inf))=0, Dbar=0),
// approximated on D_{n_max}.
inline CThetaResult c_theta(const ReproductionLaw& law, double theta, int n_max,
                            std::uint64_t replicas, CThetaVariant variant, std::uint64_t seed,
                            const SpinalOptions& sopt = {}) {
  const CumulantReport cum = tilted_cumulants(law, theta);
  CThetaResult res;
  res.as1_ok = theta * cum.psi_prime > cum.psi;

  AuxiliaryOptions opt;
  opt.n = n_max;
  opt.window = 0.0;
  opt.prune_delta = sopt.prune_delta;
  opt.cap = sopt.cap;
  opt.stop_on_positive = true;
  opt.record_gen_max = false;

  std::vector<int> lcg(replicas, 0);
  res.estimate = run_replicas(seed, replicas, [&](Stream& stream, std::uint64_t i) {
    ReplicaOutcome out;
    const AuxiliaryRealization r = build_auxiliary(law, theta, opt, stream);
    if (!r.valid) {
      out.valid = false;
      return out;
    }
    lcg[i] = r.last_contributing_generation;
    const bool no_mass_above = !r.aborted_positive && r.count_above_zero == 0;
    if (variant == CThetaVariant::weighted)
      out.value = no_mass_above ? 1.0 / static_cast<double>(r.count_at_zero) : 0.0;
    else
      out.value = (no_mass_above && r.bar_count == 0) ? 1.0 : 0.0;
    if (out.value > 0.0) out.bias = std::min(1.0, r.prune_bias_bound);
    return out;
  });
  if (res.estimate.replicas > 0)
    res.estimate.bias_bound /= static_cast<double>(res.estimate.replicas);

  std::sort(lcg.begin(), lcg.end());
  auto q = [&](double p) {
    const auto idx = static_cast<std::size_t>(p * static_cast<double>(lcg.size() - 1));
    return lcg[idx];
  };
  res.lcg_q50 = q(0.5);
  res.lcg_q90 = q(0.9);
  res.lcg_q99 = q(0.99);
  res.lcg_q999 = q(0.999);
  return res;
}

// E Z_n([a, inf)) = e^{n psi} E(e^{-theta S_n} 1{S_n >= a}) with S the tilted walk.
inline EstimateRecord mean_count(const ReproductionLaw& law, double theta, int n, double a,
                                 std::uint64_t replicas, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("mean_count: n must be >= 0");
  const SizeBiasedSampler spine(law, theta);
  const double psi = spine.psi();
  return run_replicas(seed, replicas, [&](Stream& stream, std::uint64_t) {
    ReplicaOutcome out;
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += spine.spine_step(stream);
    if (s >= a) out.value = std::exp(static_cast<double>(n) * psi - theta * s);
    return out;
  });
}

// c_value / (sqrt(2 pi n) sigma theta) * e^{-y^2/(2 sigma^2 n)} e^{-theta y} e^{-n rate}
inline double asymptotic_tail(const CumulantReport& cum, double c_value, int n, double y) {
  if (!(c_value > 0.0 && c_value <= 1.0))
    throw std::invalid_argument("asymptotic_tail: c_value must be in (0, 1]");
  if (n < 1) throw std::invalid_argument("asymptotic_tail: n must be >= 1");
  const double nn = static_cast<double>(n);
  const double sigma = std::sqrt(cum.sigma2);
  const double log_p = std::log(c_value) - 0.5 * std::log(2.0 * 3.141592653589793238462643 * nn) -
                       std::log(sigma * cum.theta) - y * y / (2.0 * cum.sigma2 * nn) -
                       cum.theta * y - nn * cum.rate;
  return std::exp(log_p);
}

struct LdpRateResult {
  double slope = 0.0;       // least-squares slope of -log P_hat against n
  double psi_star = 0.0;
  double theta = 0.0;
  std::vector<double> log_p;   // one entry per grid point
};

// Empirical check of lim (1/n) log P(M_n >= nx) = -psi*(x) via the spinal
// estimator at the Legendre maximizer of x.
inline LdpRateResult ldp_rate(const ReproductionLaw& law, double x, const std::vector<int>& n_grid,
                              std::uint64_t replicas, std::uint64_t seed,
                              const SpinalOptions& sopt = {}) {
  if (n_grid.size() < 2) throw std::invalid_argument("ldp_rate: need at least two grid points");
  const LegendreResult lp = legendre(law, x);
  if (lp.status != LegendreStatus::interior)
    throw std::runtime_error("x outside interior large-deviations regime");
  const double psi_prime = tilted_cumulants(law, lp.theta_star).psi_prime;

  LdpRateResult res;
  res.theta = lp.theta_star;
  res.psi_star = lp.psi_star;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    const int n = n_grid[i];
    const double y = static_cast<double>(n) * (x - psi_prime);
    const EstimateRecord rec =
        spinal_tail(law, lp.theta_star, n, y, replicas,
                    detail::splitmix64_mix(seed ^ (0x9e3779b97f4a7c15ULL * (i + 1))), sopt);
    if (!(rec.mean > 0.0)) throw std::runtime_error("ldp_rate: zero tail estimate on the grid");
    const double lg = std::log(rec.mean);
    res.log_p.push_back(lg);
    const double nn = static_cast<double>(n);
    sx += nn;
    sy += -lg;
    sxx += nn * nn;
    sxy += nn * (-lg);
  }
  const double m = static_cast<double>(n_grid.size());
  res.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return res;
}

// Exact Galton-Watson survival probability 1 - q_n, q_n = f(q_{n-1}), q_0 = 0.
// Rational arithmetic; denominators grow doubly fast, so keep n small here.
inline Rational gw_survival_exact(const std::vector<std::pair<std::uint64_t, Rational>>& probs,
                                  int n) {
  Rational total(0);
  for (const auto& [k, p] : probs) total += p;
  if (total != Rational(1)) throw std::invalid_argument("gw_survival: probabilities must sum to 1");
  if (n < 0) throw std::invalid_argument("gw_survival: n must be >= 0");
  // the denominators square each iteration, so the exact recursion is only
  // workable for small n; the double recursion covers the rest
  if (n > 16) throw std::invalid_argument("gw_survival_exact: n too large for exact arithmetic");
  Rational q(0);
  for (int i = 0; i < n; ++i) {
    Rational next(0);
    for (const auto& [k, p] : probs) {
      Rational pw(1);
      for (std::uint64_t j = 0; j < k; ++j) pw *= q;
      next += p * pw;
    }
    q = next;
  }
  return Rational(1) - q;
}

// Survival probability for any n.  Tracks the survival s_n directly:
// s_{n+1} = sum_k p_k (1 - (1-s_n)^k), stable even when s_n is tiny.
inline double gw_survival(const std::vector<std::pair<std::uint64_t, double>>& probs, int n) {
  double total = 0.0;
  for (const auto& [k, p] : probs) total += p;
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("gw_survival: probabilities must sum to 1");
  if (n < 0) throw std::invalid_argument("gw_survival: n must be >= 0");
  double s = 1.0;
  for (int i = 0; i < n; ++i) {
    double next = 0.0;
    for (const auto& [k, p] : probs)
      next += k == 0 ? 0.0 : p * (-std::expm1(static_cast<double>(k) * std::log1p(-s)));
    s = next;
  }
  return s;
}

enum class LltKind { exp_tail, interval };

struct LltResult {
  EstimateRecord estimate;
  double limit = 0.0;
};

// Local-limit scaling of the tilted walk:
// sqrt(n) e^{y^2/(2 sigma^2 n)} E g(S_n - n psi' + y) -> (integral g)/(sqrt(2 pi) sigma)
// with g(x) = e^{-theta x} 1{x>=0} (exp_tail) or 1_{[0,h)} (interval).
inline LltResult llt_check(const ReproductionLaw& law, double theta, int n, LltKind kind,
                           double h, double y, std::uint64_t replicas, std::uint64_t seed) {
  if (law.kind == LawKind::tabulated)
    throw std::runtime_error("llt_check: lattice law violates the non-lattice assumption (as4)");
  if (kind == LltKind::interval && !(h > 0.0))
    throw std::invalid_argument("llt_check: interval width must be positive");
  const CumulantReport cum = tilted_cumulants(law, theta);
  const SizeBiasedSampler spine(law, theta);
  const double nn = static_cast<double>(n);
  const double prefactor = std::sqrt(nn) * std::exp(y * y / (2.0 * cum.sigma2 * nn));
  const double sqrt_2pi = 2.50662827463100050241576528481;

  LltResult res;
  res.limit = (kind == LltKind::exp_tail ? 1.0 / theta : h) / (sqrt_2pi * std::sqrt(cum.sigma2));
  res.estimate = run_replicas(seed, replicas, [&](Stream& stream, std::uint64_t) {
    ReplicaOutcome out;
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += spine.spine_step(stream);
    const double x = s - nn * cum.psi_prime + y;
    if (x >= 0.0) {
      if (kind == LltKind::exp_tail)
        out.value = prefactor * std::exp(-theta * x);
      else if (x < h)
        out.value = prefactor;
    }
    return out;
  });
  return res;
}

}  // namespace brwld
