// Size-biased spine construction and the time-reversed auxiliary point
// process built from it.
//
// A realization draws n spine broods; each non-spine sibling at spine
// generation k seeds an independent forward subtree grown k-1 generations,
// and its leaves contribute atoms at b_k(i) + V(u) - S_k.  Atoms below the
// window -W are dropped at birth; supercritical subtrees are additionally
// pruned with an explicit Chernoff certificate (see prune_bias_bound).
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "brwld/point_measure.hpp"
#include "brwld/reproduction.hpp"
#include "brwld/rng.hpp"
#include "brwld/tree_sim.hpp"

namespace brwld {

struct SizeBiasedBrood {
  std::vector<double> displacements;   // b_k(1..Z)
  std::vector<std::int64_t> ticks;     // exact lattice positions, zeros otherwise
  std::size_t spine_index = 0;         // w^{(k)}, zero-based
};

// Samples (L_hat, xi): the brood under the size-biased law together with the
// index of the spine child, so that E f(L_hat, xi) = E sum_k e^{theta V(k) - psi} f(Z1, k).
class SizeBiasedSampler {
 public:
  SizeBiasedSampler(const ReproductionLaw& law, double theta)
      : law_(&law), theta_(theta), forward_(law) {
    if (!(theta > 0.0)) throw std::invalid_argument("SizeBiasedSampler: theta must be positive");
    psi_ = log_laplace(law, theta);
    if (!std::isfinite(psi_)) throw std::invalid_argument("SizeBiasedSampler: psi(theta) not finite");

    switch (law.kind) {
      case LawKind::tabulated: {
        // row j with probability p_j * (sum_i e^{theta d_ji}) / e^psi,
        // spine child i within the row with probability e^{theta d_ji} / sum
        double acc = 0.0;
        for (const auto& row : law.rows) {
          double s = 0.0;
          std::vector<double> within;
          within.reserve(row.disp_d.size());
          for (const double d : row.disp_d) {
            s += std::exp(theta * d - psi_);
            within.push_back(s);
          }
          for (auto& w : within) w /= s;   // normalized within-row cdf
          within.back() = 1.0;
          within_cdf_.push_back(std::move(within));
          acc += row.prob_d * s;
          row_cdf_.push_back(acc);
        }
        row_cdf_.back() = 1.0;   // exact by the definition of psi, up to rounding
        break;
      }
      case LawKind::mixed_gaussian: {
        // displacement tilt factors out, so the count is size-biased by count
        const double mbar = law.mean_count();
        double acc = 0.0;
        for (const auto& [k, p] : law.offspring_probs) {
          acc += static_cast<double>(k) * p / mbar;
          count_cdf_.emplace_back(acc, k);
        }
        count_cdf_.back().first = 1.0;
        break;
      }
      case LawKind::poisson_gaussian:
      case LawKind::fixed_gaussian:
        break;
    }
  }

  double psi() const { return psi_; }
  double theta() const { return theta_; }

  // One step of the tilted spine walk S: E h(S_1) = E sum_u h(V(u)) e^{theta V(u) - psi}.
  double spine_step(Stream& stream) const {
    if (law_->kind == LawKind::tabulated) {
      const auto [j, i] = pick_spine(stream);
      return law_->rows[j].disp_d[i];
    }
    return stream.normal(law_->mean_d + theta_ * law_->sd_d * law_->sd_d, law_->sd_d);
  }

  SizeBiasedBrood sample(Stream& stream) const {
    SizeBiasedBrood out;
    switch (law_->kind) {
      case LawKind::tabulated: {
        const auto [j, i] = pick_spine(stream);
        const auto& row = law_->rows[j];
        out.displacements = row.disp_d;
        out.ticks = row.ticks;
        out.spine_index = i;
        return out;
      }
      case LawKind::poisson_gaussian: {
        const std::uint64_t k = stream.poisson(law_->mu);
        fill_gaussian(stream, k + 1, out);
        return out;
      }
      case LawKind::fixed_gaussian: {
        fill_gaussian(stream, law_->b, out);
        return out;
      }
      case LawKind::mixed_gaussian: {
        const double u = stream.uniform();
        std::uint64_t k = count_cdf_.back().second;
        for (const auto& [cdf, count] : count_cdf_) {
          if (u < cdf) {
            k = count;
            break;
          }
        }
        fill_gaussian(stream, k, out);
        return out;
      }
    }
    throw std::logic_error("SizeBiasedSampler: unreachable");
  }

 private:
  // row and within-row spine index for tabulated laws
  std::pair<std::size_t, std::size_t> pick_spine(Stream& stream) const {
    const double u = stream.uniform();
    std::size_t j = row_cdf_.size() - 1;
    for (std::size_t r = 0; r < row_cdf_.size(); ++r)
      if (u < row_cdf_[r]) {
        j = r;
        break;
      }
    const double v = stream.uniform();
    const auto& within = within_cdf_[j];
    for (std::size_t i = 0; i < within.size(); ++i)
      if (v < within[i]) return {j, i};
    return {j, within.size() - 1};
  }

  // brood of `count` Gaussian children; a uniformly chosen one is replaced by
  // the tilted-displacement spine child (exchangeability makes the spine
  // index uniform given the brood)
  void fill_gaussian(Stream& stream, std::uint64_t count, SizeBiasedBrood& out) const {
    out.displacements.resize(count);
    out.ticks.assign(count, 0);
    const std::size_t w = static_cast<std::size_t>(stream.below(count));
    for (std::uint64_t i = 0; i < count; ++i)
      out.displacements[i] = (i == w)
          ? stream.normal(law_->mean_d + theta_ * law_->sd_d * law_->sd_d, law_->sd_d)
          : stream.normal(law_->mean_d, law_->sd_d);
    out.spine_index = w;
  }

  const ReproductionLaw* law_;
  double theta_;
  double psi_ = 0.0;
  ForwardSampler forward_;
  std::vector<double> row_cdf_;
  std::vector<std::vector<double>> within_cdf_;
  std::vector<std::pair<double, std::uint64_t>> count_cdf_;
};

struct AuxiliaryOptions {
  int n = 0;
  double window = 0.0;                         // W; infinity = keep everything
  double prune_delta = 1e-7;                   // 0 disables pruning
  std::uint64_t cap = 1'000'000;               // per-subtree population cap
  bool stop_on_positive = false;               // abort once an atom lands above 0
  bool record_gen_max = true;
  // skip the subtree phase entirely when S_n falls below this (the spine is
  // drawn first; streams are keyed per generation so the draws are unchanged)
  double min_s_n = -std::numeric_limits<double>::infinity();
};

struct AuxiliaryRealization {
  int n = 0;
  double window = 0.0;
  PointMeasure atoms;                          // restricted to [-W, inf)
  double s_n = 0.0;
  std::vector<double> s_path;                  // S_1..S_n
  std::uint64_t count_at_zero = 1;             // includes the delta_0 term
  std::uint64_t count_above_zero = 0;
  std::uint64_t bar_count = 0;                 // ties at 0 from siblings left of the spine
  double prune_bias_bound = 0.0;
  int last_contributing_generation = 0;
  std::vector<double> gen_rel_max;             // [k] = max atom of generation k, -inf if none
  bool valid = true;                           // false: some subtree hit the cap
  bool aborted_positive = false;               // stop_on_positive fired; atom list incomplete
};

namespace detail {

// Chernoff certificate for subtree pruning: with j generations left, a node
// at p + W = z above the kill barrier has at most e^{cert(j, z)} expected
// descendants landing >= -W, for cert = min_t [j psi(t) + t z] over t >= 0.
// Gaussian displacement kinds admit the closed-form minimizer; tabulated laws
// take the min over a fixed tilt grid plus the deterministic support bound.
struct PruneBound {
  bool gaussian = false;
  double log_m = 0.0, mean = 0.0, sigma2 = 1.0;
  double dmax = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, double>> grid;   // (t, psi(t))

  PruneBound(const ReproductionLaw& law, double theta) {
    if (law.kind == LawKind::tabulated) {
      dmax = -std::numeric_limits<double>::infinity();
      for (const auto& r : law.rows)
        for (const double d : r.disp_d) dmax = std::max(dmax, d);
      for (const double f : {0.5, 1.0, 1.5, 2.0, 3.0, 4.5, 7.0, 10.0, 15.0}) {
        const double t = f * theta;
        grid.emplace_back(t, log_laplace(law, t));
      }
    } else {
      gaussian = true;
      log_m = std::log(law.mean_count());
      mean = law.mean_d;
      sigma2 = law.sd_d * law.sd_d;
    }
  }

  double cert(double j, double z) const {
    if (gaussian) {
      const double t = -(z + j * mean) / (j * sigma2);
      if (t <= 0.0) return j * log_m;   // no climb needed; nothing to certify
      return j * log_m - (z + j * mean) * (z + j * mean) / (2.0 * j * sigma2);
    }
    // bounded support: no leaf can reach the barrier at all (margin absorbs
    // floating-point drift of the lattice positions)
    if (z + j * dmax < -1e-9) return -std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [t, psi_t] : grid) best = std::min(best, j * psi_t + t * z);
    return best;
  }
};

// Grows the subtree of one sibling for `depth` generations and records its
// leaf atoms (relative to S_k).  Returns false if the population cap is hit.
inline bool grow_subtree(const ForwardSampler& sampler, int depth, Pos root,
                         const PruneBound& bound, const AuxiliaryOptions& opt, double log_delta,
                         Stream stream, std::vector<Atom>& atoms, double& bias,
                         double& gen_max, std::uint64_t& emitted) {
  std::vector<Pos> current{root};
  std::vector<Pos> next;
  for (int d = 0; d < depth; ++d) {
    const double j = static_cast<double>(depth - d);   // generations remaining
    next.clear();
    for (const auto& p : current) {
      const double cert = bound.cert(j, p.x + opt.window);
      if (cert < log_delta ||
          cert == -std::numeric_limits<double>::infinity()) {   // support bound: exact
        bias += std::exp(cert);
        continue;
      }
      sampler.brood(stream, p, next);
      if (next.size() > opt.cap) return false;
    }
    std::swap(current, next);
  }
  for (const auto& p : current) {
    if (p.x < -opt.window) continue;
    atoms.push_back({p.x, p.t, 1});
    if (p.x > gen_max) gen_max = p.x;
    ++emitted;
  }
  return true;
}

}  // namespace detail

inline AuxiliaryRealization build_auxiliary(const ReproductionLaw& law, double theta,
                                            const AuxiliaryOptions& opt, Stream stream) {
  if (opt.n < 0) throw std::invalid_argument("build_auxiliary: n must be >= 0");
  if (opt.window < 0.0) throw std::invalid_argument("build_auxiliary: window must be >= 0");
  if (opt.prune_delta < 0.0) throw std::invalid_argument("build_auxiliary: prune_delta must be >= 0");

  SizeBiasedSampler spine(law, theta);
  ForwardSampler sampler(law);
  const bool exact = law.lattice_exact();
  const detail::PruneBound bound(law, theta);
  const double log_delta = opt.prune_delta > 0.0 ? std::log(opt.prune_delta)
                                                 : -std::numeric_limits<double>::infinity();

  AuxiliaryRealization out;
  out.n = opt.n;
  out.window = opt.window;
  out.s_path.reserve(opt.n);
  if (opt.record_gen_max)
    out.gen_rel_max.assign(static_cast<std::size_t>(opt.n) + 1,
                           -std::numeric_limits<double>::infinity());

  std::vector<Atom> atoms{{0.0, 0, 1}};   // the delta_0 term
  double s = 0.0;
  std::int64_t s_ticks = 0;
  double bias = 0.0;

  // phase 1: the spine walk; each generation's brood has its own keyed
  // stream, so drawing them all up front changes nothing downstream and lets
  // callers that condition on S_n skip the subtree phase outright
  std::vector<SizeBiasedBrood> broods;
  broods.reserve(static_cast<std::size_t>(opt.n));
  for (int k = 1; k <= opt.n; ++k) {
    Stream brood_stream = stream.child(2 * static_cast<std::uint64_t>(k));
    broods.push_back(spine.sample(brood_stream));
    s += broods.back().displacements[broods.back().spine_index];
    out.s_path.push_back(s);
  }
  out.s_n = s;
  if (s < opt.min_s_n) {
    out.atoms = make_measure(std::move(atoms), exact);   // just the delta_0 term
    return out;
  }

  s = 0.0;
  for (int k = 1; k <= opt.n; ++k) {
    // generation-k randomness is keyed to k, not to draw order, so the atom
    // multiset at n is contained in the one at n+1 for the same stream
    const Stream subtree_root = stream.child(2 * static_cast<std::uint64_t>(k) + 1);
    const SizeBiasedBrood& brood = broods[static_cast<std::size_t>(k - 1)];

    s += brood.displacements[brood.spine_index];
    s_ticks += brood.ticks[brood.spine_index];

    double gen_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < brood.displacements.size(); ++i) {
      if (i == brood.spine_index) continue;
      const Pos root{brood.displacements[i] - s, brood.ticks[i] - s_ticks};
      const std::size_t before = atoms.size();
      std::uint64_t emitted = 0;
      if (!detail::grow_subtree(sampler, k - 1, root, bound, opt, log_delta,
                                subtree_root.child(i), atoms, bias, gen_max, emitted)) {
        out.valid = false;
        out.prune_bias_bound = bias;
        return out;
      }
      if (emitted > 0) out.last_contributing_generation = k;
      for (std::size_t a = before; a < atoms.size(); ++a) {
        const bool at_zero = exact ? atoms[a].ticks == 0 : atoms[a].x == 0.0;
        if (at_zero) {
          atoms[a].x = 0.0;   // keep the tie atom exactly at the origin
          ++out.count_at_zero;
          if (i < brood.spine_index) ++out.bar_count;
        } else if (exact ? atoms[a].ticks > 0 : atoms[a].x > 0.0) {
          ++out.count_above_zero;
        }
      }
    }
    if (opt.record_gen_max) out.gen_rel_max[static_cast<std::size_t>(k)] = gen_max;
    if (opt.stop_on_positive && out.count_above_zero > 0) {
      out.aborted_positive = true;
      break;
    }
  }

  out.prune_bias_bound = bias;
  out.atoms = make_measure(std::move(atoms), exact);
  return out;
}

// Empirical frequency of the stabilization event
// {for all generations l in [burn_in, n]: max sibling-subtree atom of
//  generation l is below -epsilon*l}, over the valid realizations.
inline double stabilization_fraction(const std::vector<AuxiliaryRealization>& realizations,
                                     int burn_in, double epsilon) {
  if (burn_in < 1) throw std::invalid_argument("stabilization_fraction: burn_in must be >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("stabilization_fraction: epsilon must be positive");
  std::uint64_t hits = 0;
  std::uint64_t total = 0;
  for (const auto& r : realizations) {
    if (!r.valid || r.aborted_positive) continue;
    if (r.gen_rel_max.empty())
      throw std::runtime_error("stabilization_fraction: realizations lack per-generation maxima");
    // atoms below -W were dropped; the event is decidable only when every
    // dropped atom was automatically below -epsilon*l, i.e. W >= epsilon*n
    if (r.window < epsilon * static_cast<double>(r.n))
      throw std::runtime_error("A-event undecidable at this window");
    bool ok = true;
    for (int l = burn_in; l <= r.n; ++l)
      if (!(r.gen_rel_max[static_cast<std::size_t>(l)] < -epsilon * static_cast<double>(l))) {
        ok = false;
        break;
      }
    hits += ok ? 1 : 0;
    ++total;
  }
  if (total == 0) throw std::runtime_error("stabilization_fraction: no usable realizations");
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace brwld
