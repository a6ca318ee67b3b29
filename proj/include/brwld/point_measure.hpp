// Finite point measures with sorted atoms, and the piecewise-linear bump
// functions used as Laplace-functional test functions.
#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace brwld {

struct Atom {
  double x = 0.0;
  std::int64_t ticks = 0;   // exact numerator over the law's tick denominator
  std::uint64_t mult = 1;
};

// Sorted atom list with multiplicities.  `exact` marks measures whose
// locations come from a rational lattice law; atom identity is then decided
// on the integer ticks, otherwise on exact float equality (a measure-zero
// event for continuous families).
struct PointMeasure {
  bool exact = false;
  std::vector<Atom> atoms;  // strictly increasing locations

  std::uint64_t total_mass() const {
    std::uint64_t m = 0;
    for (const auto& a : atoms) m += a.mult;
    return m;
  }

  bool empty() const { return atoms.empty(); }
  double max_location() const {
    if (atoms.empty()) throw std::runtime_error("max_location of an empty measure");
    return atoms.back().x;
  }

  std::uint64_t mass_above(double x) const {
    std::uint64_t m = 0;
    for (auto it = atoms.rbegin(); it != atoms.rend() && it->x > x; ++it) m += it->mult;
    return m;
  }

  std::uint64_t mass_at(double x) const {
    for (const auto& a : atoms)
      if (a.x == x) return a.mult;
    return 0;
  }
};

inline PointMeasure make_measure(std::vector<Atom> raw, bool exact) {
  PointMeasure pm;
  pm.exact = exact;
  if (raw.empty()) return pm;
  if (exact) {
    std::sort(raw.begin(), raw.end(), [](const Atom& a, const Atom& b) { return a.ticks < b.ticks; });
  } else {
    std::sort(raw.begin(), raw.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
  }
  for (const auto& a : raw) {
    const bool same = !pm.atoms.empty() && (exact ? pm.atoms.back().ticks == a.ticks
                                                  : pm.atoms.back().x == a.x);
    if (same)
      pm.atoms.back().mult += a.mult;
    else
      pm.atoms.push_back(a);
  }
  return pm;
}

// Non-negative compactly supported piecewise-linear test function, given by
// breakpoints; zero outside [front.x, back.x].
struct BumpSpec {
  std::vector<std::pair<double, double>> pts;  // (x, value), strictly increasing x

  BumpSpec() = default;
  explicit BumpSpec(std::vector<std::pair<double, double>> breakpoints) : pts(std::move(breakpoints)) {
    if (pts.size() < 2) throw std::invalid_argument("BumpSpec: need at least two breakpoints");
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
      if (!(pts[i].first < pts[i + 1].first))
        throw std::invalid_argument("BumpSpec: breakpoints must be strictly increasing");
    for (const auto& [x, v] : pts)
      if (v < 0.0) throw std::invalid_argument("BumpSpec: values must be non-negative");
  }

  static BumpSpec triangle(double a, double peak, double b, double height = 1.0) {
    return BumpSpec({{a, 0.0}, {peak, height}, {b, 0.0}});
  }

  double operator()(double x) const {
    if (x <= pts.front().first || x >= pts.back().first) {
      if (x == pts.front().first) return pts.front().second;
      if (x == pts.back().first) return pts.back().second;
      return 0.0;
    }
    auto it = std::upper_bound(pts.begin(), pts.end(), x,
                               [](double v, const auto& p) { return v < p.first; });
    const auto& [x1, v1] = *(it - 1);
    const auto& [x2, v2] = *it;
    return v1 + (v2 - v1) * (x - x1) / (x2 - x1);
  }

  double support_min() const { return pts.front().first; }
};

// <mu, phi> = sum over atoms of mult * phi(location)
inline double inner(const PointMeasure& mu, const BumpSpec& phi) {
  double s = 0.0;
  for (const auto& a : mu.atoms) s += static_cast<double>(a.mult) * phi(a.x);
  return s;
}

}  // namespace brwld
