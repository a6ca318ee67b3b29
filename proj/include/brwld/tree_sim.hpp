// Forward simulation of the branching random walk under its original law,
// plus the exact enumeration oracle for tiny tabulated instances.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "brwld/harness.hpp"
#include "brwld/point_measure.hpp"
#include "brwld/reproduction.hpp"
#include "brwld/rng.hpp"

namespace brwld {

// particle position; ticks carried only for lattice-exact laws
struct Pos {
  double x = 0.0;
  std::int64_t t = 0;
};

// Samples one brood under the original law P.
class ForwardSampler {
 public:
  explicit ForwardSampler(const ReproductionLaw& law) : law_(&law) {
    if (law.kind == LawKind::tabulated) {
      double acc = 0.0;
      for (const auto& r : law.rows) {
        acc += r.prob_d;
        row_cdf_.push_back(acc);
      }
      row_cdf_.back() = 1.0;
    } else if (law.kind == LawKind::mixed_gaussian) {
      double acc = 0.0;
      for (const auto& [k, p] : law.offspring_probs) {
        acc += p;
        count_cdf_.emplace_back(acc, k);
      }
      count_cdf_.back().first = 1.0;
    }
  }

  // appends children of a parent at `parent` to `out`
  void brood(Stream& stream, const Pos& parent, std::vector<Pos>& out) const {
    switch (law_->kind) {
      case LawKind::tabulated: {
        const auto& row = (*law_).rows[pick_row(stream)];
        for (std::size_t i = 0; i < row.disp_d.size(); ++i)
          out.push_back({parent.x + row.disp_d[i], parent.t + row.ticks[i]});
        return;
      }
      case LawKind::poisson_gaussian: {
        const std::uint64_t k = stream.poisson(law_->mu);
        for (std::uint64_t i = 0; i < k; ++i)
          out.push_back({parent.x + stream.normal(law_->mean_d, law_->sd_d), 0});
        return;
      }
      case LawKind::fixed_gaussian: {
        for (std::uint64_t i = 0; i < law_->b; ++i)
          out.push_back({parent.x + stream.normal(law_->mean_d, law_->sd_d), 0});
        return;
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
        for (std::uint64_t i = 0; i < k; ++i)
          out.push_back({parent.x + stream.normal(law_->mean_d, law_->sd_d), 0});
        return;
      }
    }
  }

  std::size_t pick_row(Stream& stream) const {
    const double u = stream.uniform();
    for (std::size_t j = 0; j < row_cdf_.size(); ++j)
      if (u < row_cdf_[j]) return j;
    return row_cdf_.size() - 1;
  }

 private:
  const ReproductionLaw* law_;
  std::vector<double> row_cdf_;
  std::vector<std::pair<double, std::uint64_t>> count_cdf_;
};

struct GenerationSnapshot {
  int n = 0;
  PointMeasure positions;
  std::optional<double> m_n;   // empty = extinct (the paper's M_n = -inf convention)
  std::uint64_t population = 0;
  bool capped = false;
};

inline std::vector<GenerationSnapshot> run_forward(const ReproductionLaw& law, int n,
                                                   std::uint64_t cap, Stream stream) {
  if (n < 0) throw std::invalid_argument("run_forward: n must be >= 0");
  if (cap < 1) throw std::invalid_argument("run_forward: cap must be >= 1");
  ForwardSampler sampler(law);
  std::vector<GenerationSnapshot> out;
  out.reserve(static_cast<std::size_t>(n) + 1);

  std::vector<Pos> current{{0.0, 0}};
  for (int g = 0;; ++g) {
    GenerationSnapshot snap;
    snap.n = g;
    snap.population = current.size();
    std::vector<Atom> atoms;
    atoms.reserve(current.size());
    for (const auto& p : current) atoms.push_back({p.x, p.t, 1});
    snap.positions = make_measure(std::move(atoms), law.lattice_exact());
    if (!current.empty()) snap.m_n = snap.positions.max_location();
    out.push_back(std::move(snap));
    if (g == n) break;

    std::vector<Pos> next;
    next.reserve(current.size() * 2);
    bool capped = false;
    for (const auto& p : current) {
      sampler.brood(stream, p, next);
      if (next.size() > cap) {
        capped = true;
        break;
      }
    }
    if (capped) {
      out.back().capped = true;
      break;
    }
    current = std::move(next);
  }
  return out;
}

// E_n = sum delta_{V(u) - M_n}
inline PointMeasure extremal_process(const GenerationSnapshot& snapshot) {
  if (!snapshot.m_n) throw std::runtime_error("extremal process undefined on extinction");
  PointMeasure out = snapshot.positions;
  const double m = *snapshot.m_n;
  const std::int64_t mt = out.atoms.empty() ? 0 : out.atoms.back().ticks;
  for (auto& a : out.atoms) {
    a.x -= m;
    a.ticks -= mt;
  }
  if (!out.atoms.empty()) out.atoms.back().x = 0.0;  // shift is exact at the tip
  return out;
}

// W_n = sum e^{theta V(u) - n psi(theta)}, in log-sum-exp form
inline double additive_martingale(const GenerationSnapshot& snapshot, double theta, double psi) {
  if (snapshot.capped) throw std::runtime_error("additive_martingale: capped snapshot is unusable");
  if (snapshot.positions.empty()) return 0.0;
  const double shift = theta * snapshot.positions.max_location();
  double s = 0.0;
  for (const auto& a : snapshot.positions.atoms)
    s += static_cast<double>(a.mult) * std::exp(theta * a.x - shift);
  return std::exp(shift - static_cast<double>(snapshot.n) * psi) * s;
}

// ---------------------------------------------------------------------------
// exact enumeration oracle, P(M_n >= a), tabulated rational laws only

namespace detail {

struct TailEnumerator {
  const ReproductionLaw* law;
  std::map<std::pair<int, std::int64_t>, Rational> memo;
  std::size_t work = 0;

  // P(M_n >= t ticks), by recursive convolution over rows
  Rational prob(int n, std::int64_t t) {
    if (n == 0) return t <= 0 ? Rational(1) : Rational(0);
    const auto key = std::make_pair(n, t);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    if (++work > 2'000'000) throw std::runtime_error("enumerate_tail: size bound exceeded");
    Rational total(0);
    for (const auto& row : law->rows) {
      // M over the subtrees of this row's children; subtrees are independent
      Rational miss(1);
      for (const auto d : row.ticks) miss *= Rational(1) - prob(n - 1, t - d);
      total += row.prob * (Rational(1) - miss);
    }
    memo.emplace(key, total);
    return total;
  }
};

}  // namespace detail

inline Rational enumerate_tail(const ReproductionLaw& law, int n, const Rational& a) {
  if (law.kind != LawKind::tabulated)
    throw std::invalid_argument("enumerate_tail: needs a tabulated rational law");
  if (n < 0 || n > 12) throw std::invalid_argument("enumerate_tail: n out of supported range");
  // threshold in ticks, rounded up: M >= a  <=>  ticks >= ceil(a * denom)
  const Rational scaled = a * Rational(BigInt(law.tick_denom));
  BigInt t = scaled.numerator() / scaled.denominator();
  if (Rational(t) < scaled) t += 1;
  detail::TailEnumerator e{&law, {}, 0};
  return e.prob(n, static_cast<std::int64_t>(t));
}

// baseline frequency estimator of P(M_n >= a)
inline EstimateRecord naive_tail(const ReproductionLaw& law, int n, double a,
                                 std::uint64_t replicas, std::uint64_t seed,
                                 std::uint64_t cap = 1'000'000) {
  EstimateRecord rec = run_replicas(seed, replicas, [&](Stream& stream, std::uint64_t) {
    ReplicaOutcome out;
    const auto gens = run_forward(law, n, cap, stream);
    if (gens.back().capped) {
      out.valid = false;
      return out;
    }
    const auto& last = gens.back();
    out.value = (last.n == n && last.m_n && *last.m_n >= a) ? 1.0 : 0.0;
    return out;
  });
  // capped replicas poison the estimate once they stop being negligible
  if (rec.invalid_replicas * 1000 > rec.replicas + rec.invalid_replicas)
    throw std::runtime_error("naive_tail: more than 0.1% of replicas hit the population cap");
  return rec;
}

}  // namespace brwld
