// Reproduction-law families and their deterministic quantities: log-Laplace
// transform, tilted cumulants, Legendre transform, critical speed and the
// standing assumptions on the branching random walk.
#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace brwld {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::rational<BigInt>;

inline double to_double(const Rational& r) {
  return static_cast<double>(boost::multiprecision::cpp_bin_float_quad(r.numerator()) /
                             boost::multiprecision::cpp_bin_float_quad(r.denominator()));
}

enum class LawKind { tabulated, poisson_gaussian, fixed_gaussian, mixed_gaussian };

struct TabRow {
  Rational prob;
  std::vector<Rational> displacements;
  // cached float forms
  double prob_d = 0.0;
  std::vector<double> disp_d;
  // displacement numerators over the law-wide common denominator
  std::vector<std::int64_t> ticks;
};

// One-step offspring/displacement law of the branching random walk.
struct ReproductionLaw {
  LawKind kind = LawKind::tabulated;

  // tabulated
  std::vector<TabRow> rows;
  std::int64_t tick_denom = 1;  // displacement = ticks / tick_denom, exactly

  // gaussian families: Poisson(mu) / exactly b / general finite count,
  // i.i.d. Normal(mean_d, sd_d^2) displacements
  double mu = 0.0;
  std::uint64_t b = 0;
  std::vector<std::pair<std::uint64_t, double>> offspring_probs;
  double mean_d = 0.0;
  double sd_d = 1.0;

  bool lattice_exact() const { return kind == LawKind::tabulated; }

  // mean offspring count
  double mean_count() const {
    switch (kind) {
      case LawKind::tabulated: {
        double m = 0.0;
        for (const auto& r : rows) m += r.prob_d * static_cast<double>(r.disp_d.size());
        return m;
      }
      case LawKind::poisson_gaussian:
        return mu;
      case LawKind::fixed_gaussian:
        return static_cast<double>(b);
      case LawKind::mixed_gaussian: {
        double m = 0.0;
        for (const auto& [k, p] : offspring_probs) m += p * static_cast<double>(k);
        return m;
      }
    }
    return 0.0;
  }

  // finite offspring-count distribution; Poisson is not finite-support
  std::vector<std::pair<std::uint64_t, double>> count_distribution() const {
    switch (kind) {
      case LawKind::tabulated: {
        std::vector<std::pair<std::uint64_t, double>> out;
        for (const auto& r : rows) {
          const auto k = static_cast<std::uint64_t>(r.disp_d.size());
          auto it = std::find_if(out.begin(), out.end(),
                                 [&](const auto& e) { return e.first == k; });
          if (it == out.end())
            out.emplace_back(k, r.prob_d);
          else
            it->second += r.prob_d;
        }
        std::sort(out.begin(), out.end());
        return out;
      }
      case LawKind::fixed_gaussian:
        return {{b, 1.0}};
      case LawKind::mixed_gaussian: {
        auto out = offspring_probs;
        std::sort(out.begin(), out.end());
        return out;
      }
      case LawKind::poisson_gaussian:
        throw std::runtime_error("count_distribution: Poisson offspring has unbounded support");
    }
    return {};
  }
};

// ---------------------------------------------------------------------------
// parsing

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// cpp_int's string constructor treats a leading zero as octal; normalize first
inline BigInt parse_bigint(std::string s) {
  std::string sign;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    if (s[0] == '-') sign = "-";
    s.erase(0, 1);
  }
  const auto nz = s.find_first_not_of('0');
  s = (nz == std::string::npos && !s.empty()) ? "0" : s.substr(nz == std::string::npos ? 0 : nz);
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw std::invalid_argument("malformed number: " + s);
  return BigInt(sign + s);
}

// accepts integers, p/q fractions and finite decimals, exactly
inline Rational parse_rational(const std::string& tok) {
  const auto slash = tok.find('/');
  if (slash != std::string::npos) {
    const BigInt num = parse_bigint(tok.substr(0, slash));
    const BigInt den = parse_bigint(tok.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("rational with zero denominator: " + tok);
    return Rational(num, den);
  }
  const auto dot = tok.find('.');
  if (dot != std::string::npos) {
    const std::string digits = tok.substr(0, dot) + tok.substr(dot + 1);
    if (digits.empty() || digits == "-" || digits == "+")
      throw std::invalid_argument("malformed number: " + tok);
    BigInt den = 1;
    for (std::size_t i = dot + 1; i < tok.size(); ++i) den *= 10;
    return Rational(parse_bigint(digits), den);
  }
  return Rational(parse_bigint(tok), BigInt(1));
}

inline double parse_double(const std::string& tok) {
  std::size_t pos = 0;
  const double v = std::stod(tok, &pos);
  if (pos != tok.size()) throw std::invalid_argument("malformed number: " + tok);
  return v;
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace detail

// Law-file schema: lines (or ';'-separated clauses) of `key = value` pairs.
//   kind = tabulated | poisson_gaussian | fixed_gaussian | mixed_gaussian
//   row  = <prob> : <d1> <d2> ...        (tabulated; rational or decimal)
//   prob = <count> <probability>         (mixed_gaussian)
//   mu= / b= / mean= / sd=               (parametric families)
// Plain `key=value` pairs may share a line.
inline ReproductionLaw parse_law(const std::string& text) {
  ReproductionLaw law;
  bool kind_set = false;
  std::vector<std::pair<std::string, std::string>> kv;
  std::vector<std::string> row_specs;
  std::vector<std::pair<std::string, std::string>> prob_specs;

  std::string item;
  std::istringstream lines(text);
  std::string raw;
  std::vector<std::string> clauses;
  while (std::getline(lines, raw)) {
    std::istringstream semis(raw);
    while (std::getline(semis, item, ';')) clauses.push_back(item);
  }

  for (auto& clause : clauses) {
    const auto hash = clause.find('#');
    if (hash != std::string::npos) clause = clause.substr(0, hash);
    const std::string line = detail::trim(clause);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("law schema: missing '=' in: " + line);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string rest = detail::trim(line.substr(eq + 1));
    if (key == "row") {
      row_specs.push_back(rest);
    } else if (key == "prob") {
      const auto toks = detail::split_ws(rest);
      if (toks.size() != 2) throw std::invalid_argument("law schema: prob wants '<count> <p>': " + rest);
      prob_specs.emplace_back(toks[0], toks[1]);
    } else {
      // remaining clause may hold further inline key=value pairs
      for (const auto& tok : detail::split_ws(key + "=" + rest)) {
        const auto e = tok.find('=');
        if (e == std::string::npos) throw std::invalid_argument("law schema: stray token: " + tok);
        kv.emplace_back(tok.substr(0, e), tok.substr(e + 1));
      }
    }
  }

  for (const auto& [key, value] : kv) {
    if (key == "kind") {
      kind_set = true;
      if (value == "tabulated") law.kind = LawKind::tabulated;
      else if (value == "poisson_gaussian") law.kind = LawKind::poisson_gaussian;
      else if (value == "fixed_gaussian") law.kind = LawKind::fixed_gaussian;
      else if (value == "mixed_gaussian") law.kind = LawKind::mixed_gaussian;
      else throw std::invalid_argument("law schema: unknown kind '" + value + "'");
    } else if (key == "mu") {
      law.mu = detail::parse_double(value);
    } else if (key == "b") {
      law.b = static_cast<std::uint64_t>(std::stoull(value));
    } else if (key == "mean" || key == "mean_d") {
      law.mean_d = detail::parse_double(value);
    } else if (key == "sd" || key == "sd_d") {
      law.sd_d = detail::parse_double(value);
    } else {
      throw std::invalid_argument("law schema: unknown key '" + key + "'");
    }
  }
  if (!kind_set) throw std::invalid_argument("law schema: missing 'kind'");

  if (law.kind == LawKind::tabulated) {
    if (row_specs.empty()) throw std::invalid_argument("law schema: tabulated law needs row entries");
    Rational psum(0);
    for (const auto& spec : row_specs) {
      const auto colon = spec.find(':');
      if (colon == std::string::npos)
        throw std::invalid_argument("law schema: row wants '<prob> : <d1> ...': " + spec);
      TabRow row;
      row.prob = detail::parse_rational(detail::trim(spec.substr(0, colon)));
      if (row.prob < Rational(0) || row.prob > Rational(1))
        throw std::invalid_argument("law schema: row probability outside [0,1]");
      for (const auto& tok : detail::split_ws(spec.substr(colon + 1)))
        row.displacements.push_back(detail::parse_rational(tok));
      psum += row.prob;
      law.rows.push_back(std::move(row));
    }
    if (psum != Rational(1)) {
      std::ostringstream msg;
      msg << "law schema: probabilities sum to " << psum.numerator() << "/" << psum.denominator();
      throw std::invalid_argument(msg.str());
    }
    // common denominator for exact integer position arithmetic
    BigInt denom = 1;
    for (const auto& r : law.rows)
      for (const auto& d : r.displacements) denom = boost::multiprecision::lcm(denom, d.denominator());
    if (denom > BigInt(std::numeric_limits<std::int64_t>::max()))
      throw std::invalid_argument("law schema: displacement denominators too large");
    law.tick_denom = static_cast<std::int64_t>(denom);
    for (auto& r : law.rows) {
      r.prob_d = to_double(r.prob);
      for (const auto& d : r.displacements) {
        const BigInt t = d.numerator() * (denom / d.denominator());
        if (t > BigInt(std::numeric_limits<std::int64_t>::max()) ||
            t < BigInt(std::numeric_limits<std::int64_t>::min()))
          throw std::invalid_argument("law schema: displacement numerators too large");
        r.ticks.push_back(static_cast<std::int64_t>(t));
        r.disp_d.push_back(to_double(d));
      }
    }
    bool some_child = false;
    for (const auto& r : law.rows)
      if (!r.displacements.empty() && r.prob > Rational(0)) some_child = true;
    if (!some_child)
      throw std::invalid_argument("law schema: P(Z_1=0)=1, the process dies at the root");
  } else if (law.kind == LawKind::poisson_gaussian) {
    if (!(law.mu > 0.0)) throw std::invalid_argument("law schema: poisson_gaussian wants mu > 0");
    if (!(law.sd_d > 0.0)) throw std::invalid_argument("law schema: sd must be positive");
  } else if (law.kind == LawKind::fixed_gaussian) {
    if (law.b < 1) throw std::invalid_argument("law schema: fixed_gaussian wants b >= 1");
    if (!(law.sd_d > 0.0)) throw std::invalid_argument("law schema: sd must be positive");
  } else {
    if (prob_specs.empty()) throw std::invalid_argument("law schema: mixed_gaussian needs prob entries");
    double psum = 0.0;
    bool some_child = false;
    for (const auto& [k, p] : prob_specs) {
      const auto count = static_cast<std::uint64_t>(std::stoull(k));
      const double prob = detail::parse_double(p);
      if (prob < 0.0 || prob > 1.0) throw std::invalid_argument("law schema: probability outside [0,1]");
      law.offspring_probs.emplace_back(count, prob);
      psum += prob;
      if (count >= 1 && prob > 0.0) some_child = true;
    }
    if (std::abs(psum - 1.0) > 1e-9) {
      std::ostringstream msg;
      msg << "law schema: probabilities sum to " << psum;
      throw std::invalid_argument(msg.str());
    }
    if (!some_child)
      throw std::invalid_argument("law schema: P(Z_1=0)=1, the process dies at the root");
    if (!(law.sd_d > 0.0)) throw std::invalid_argument("law schema: sd must be positive");
  }
  return law;
}

// ---------------------------------------------------------------------------
// cumulants

namespace detail {

// max displacement across rows; -inf when every row is empty
inline double tab_dmax(const ReproductionLaw& law) {
  double dmax = -std::numeric_limits<double>::infinity();
  for (const auto& r : law.rows)
    for (const double d : r.disp_d) dmax = std::max(dmax, d);
  return dmax;
}

// tilted sums for a tabulated law, shifted by d_max so exponentials stay
// bounded: returns (S0, S1, S2) with Sk = sum_j p_j sum_i d^k e^{theta(d - dmax)}
struct TabSums {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, dmax = 0.0;
};

inline TabSums tab_tilted_sums(const ReproductionLaw& law, double theta) {
  TabSums out;
  out.dmax = tab_dmax(law);
  for (const auto& r : law.rows) {
    for (const double d : r.disp_d) {
      const double w = r.prob_d * std::exp(theta * (d - out.dmax));
      out.s0 += w;
      out.s1 += w * d;
      out.s2 += w * d * d;
    }
  }
  return out;
}

}  // namespace detail

// psi(theta) = log E(sum_{|u|=1} e^{theta V(u)})
inline double log_laplace(const ReproductionLaw& law, double theta) {
  if (theta < 0.0) throw std::invalid_argument("log_laplace: theta must be >= 0");
  switch (law.kind) {
    case LawKind::tabulated: {
      const auto s = detail::tab_tilted_sums(law, theta);
      return theta * s.dmax + std::log(s.s0);
    }
    default:
      return std::log(law.mean_count()) + theta * law.mean_d + 0.5 * theta * theta * law.sd_d * law.sd_d;
  }
}

struct CumulantReport {
  double theta = 0.0;
  double psi = 0.0;
  double psi_prime = 0.0;
  double sigma2 = 0.0;          // variance of the tilted walk step
  double rate = 0.0;            // theta * psi' - psi
};

inline CumulantReport tilted_cumulants(const ReproductionLaw& law, double theta) {
  if (theta < 0.0) throw std::invalid_argument("tilted_cumulants: theta must be >= 0");
  CumulantReport rep;
  rep.theta = theta;
  rep.psi = log_laplace(law, theta);
  if (law.kind == LawKind::tabulated) {
    const auto s = detail::tab_tilted_sums(law, theta);
    rep.psi_prime = s.s1 / s.s0;
    rep.sigma2 = s.s2 / s.s0 - rep.psi_prime * rep.psi_prime;
  } else {
    rep.psi_prime = law.mean_d + theta * law.sd_d * law.sd_d;
    rep.sigma2 = law.sd_d * law.sd_d;
  }
  rep.rate = theta * rep.psi_prime - rep.psi;
  if (!std::isfinite(rep.psi) || !std::isfinite(rep.psi_prime) || !std::isfinite(rep.sigma2))
    throw std::runtime_error("tilted_cumulants: non-finite intermediate (theta too extreme)");
  return rep;
}

// ---------------------------------------------------------------------------
// Legendre transform and critical speed

enum class LegendreStatus { interior, boundary_zero, boundary_sup };

struct LegendreResult {
  double psi_star = 0.0;
  double theta_star = 0.0;      // maximizer when interior
  LegendreStatus status = LegendreStatus::interior;
};

// psi*(x) = sup_{theta >= 0} (theta x - psi(theta)).  The inner function is
// concave with derivative x - psi'(theta); psi' is monotone, so bracketing by
// doubling from theta=1 followed by bisection is unconditionally safe.
inline LegendreResult legendre(const ReproductionLaw& law, double x) {
  LegendreResult res;
  auto deriv = [&](double theta) { return x - tilted_cumulants(law, theta).psi_prime; };

  if (deriv(0.0) <= 0.0) {
    res.status = LegendreStatus::boundary_zero;
    res.theta_star = 0.0;
    res.psi_star = -log_laplace(law, 0.0);
    return res;
  }
  if (law.kind == LawKind::tabulated) {
    // bounded support: psi' never reaches dmax, so x >= dmax is a boundary
    const double dmax = detail::tab_dmax(law);
    if (x >= dmax) {
      res.status = LegendreStatus::boundary_sup;
      res.theta_star = std::numeric_limits<double>::infinity();
      if (x > dmax) {
        res.psi_star = std::numeric_limits<double>::infinity();
      } else {
        double a = 0.0;
        for (const auto& r : law.rows)
          for (const double d : r.disp_d)
            if (d == dmax) a += r.prob_d;
        res.psi_star = -std::log(a);
      }
      return res;
    }
  }
  double lo = 0.0, hi = 1.0;
  const double theta_cap = 4096.0;
  while (deriv(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > theta_cap) {
      // supremum attained only as theta -> infinity: x at or beyond the
      // essential supremum of the displacement support
      res.status = LegendreStatus::boundary_sup;
      res.theta_star = std::numeric_limits<double>::infinity();
      if (law.kind == LawKind::tabulated) {
        const double dmax = detail::tab_dmax(law);
        if (x > dmax) {
          res.psi_star = std::numeric_limits<double>::infinity();
        } else {
          // x == dmax up to rounding: limit is -log E(#children at d_max)
          double a = 0.0;
          for (const auto& r : law.rows)
            for (const double d : r.disp_d)
              if (d == dmax) a += r.prob_d;
          res.psi_star = -std::log(a);
        }
      } else {
        // gaussian families have unbounded psi'; reaching the cap means x is
        // astronomically far out
        res.psi_star = hi * x - log_laplace(law, hi);
      }
      return res;
    }
  }
  for (int i = 0; i < 80 && hi - lo > 1e-10; ++i) {
    const double mid = 0.5 * (lo + hi);
    (deriv(mid) > 0.0 ? lo : hi) = mid;
  }
  res.theta_star = 0.5 * (lo + hi);
  res.psi_star = res.theta_star * x - log_laplace(law, res.theta_star);
  return res;
}

struct CriticalSpeed {
  double x_star = 0.0;
  bool solvable = true;  // front-speed interpretation needs supercriticality
};

// x* = inf_{theta>0} psi(theta)/theta, located where theta psi'(theta) = psi(theta)
inline CriticalSpeed critical_speed(const ReproductionLaw& law) {
  CriticalSpeed out;
  const double psi0 = log_laplace(law, 0.0);
  if (psi0 <= 0.0) out.solvable = false;
  auto g = [&](double theta) { return tilted_cumulants(law, theta).rate; };
  if (psi0 < 0.0) {
    // psi(theta)/theta -> -inf as theta -> 0+
    out.x_star = -std::numeric_limits<double>::infinity();
    return out;
  }
  if (psi0 == 0.0) {
    // critical (and the deterministic single-child) case: infimum at theta -> 0+
    out.x_star = tilted_cumulants(law, 0.0).psi_prime;
    return out;
  }
  double lo = 1e-8, hi = 1.0;
  const double theta_cap = 4096.0;
  while (g(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > theta_cap) {
      // rate never reaches 0 at finite theta: x* is the essential supremum
      out.x_star = tilted_cumulants(law, theta_cap).psi_prime;
      if (law.kind == LawKind::tabulated) out.x_star = detail::tab_dmax(law);
      return out;
    }
  }
  for (int i = 0; i < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  out.x_star = tilted_cumulants(law, 0.5 * (lo + hi)).psi_prime;
  return out;
}

// ---------------------------------------------------------------------------
// assumptions

struct AssumptionReport {
  bool asn = false;   // P(Z_1 >= 2) > 0
  bool as1 = false;   // psi(theta) < inf and theta psi'(theta) > psi(theta)
  bool as2 = false;   // tilted variance in (0, inf)
  bool as3 = false;   // L log L condition; holds for every built-in family
  bool as4 = false;   // non-lattice
  double psi0 = 0.0;
  int criticality = 0;  // +1 super, 0 critical, -1 sub
};

// gcd-based lattice detection on the exact displacement ticks; any finite
// rational support is lattice unless it collapses to a single point with b=0
inline bool tabulated_is_lattice(const ReproductionLaw& law) {
  std::vector<std::int64_t> ticks;
  for (const auto& r : law.rows)
    if (r.prob > Rational(0))
      for (const auto t : r.ticks) ticks.push_back(t);
  if (ticks.empty()) return false;
  // span = gcd of pairwise differences; a finite set always fits a + b Z
  return true;
}

inline AssumptionReport check_assumptions(const ReproductionLaw& law, double theta) {
  AssumptionReport rep;
  rep.psi0 = log_laplace(law, 0.0);
  rep.criticality = rep.psi0 > 0.0 ? 1 : (rep.psi0 < 0.0 ? -1 : 0);

  switch (law.kind) {
    case LawKind::tabulated:
      for (const auto& r : law.rows)
        if (r.prob > Rational(0) && r.displacements.size() >= 2) rep.asn = true;
      break;
    case LawKind::poisson_gaussian:
      rep.asn = law.mu > 0.0;
      break;
    case LawKind::fixed_gaussian:
      rep.asn = law.b >= 2;
      break;
    case LawKind::mixed_gaussian:
      for (const auto& [k, p] : law.offspring_probs)
        if (k >= 2 && p > 0.0) rep.asn = true;
      break;
  }

  const auto cum = tilted_cumulants(law, theta);
  rep.as1 = std::isfinite(cum.psi) && cum.rate > 0.0;
  rep.as2 = cum.sigma2 > 0.0 && std::isfinite(cum.sigma2);
  // finite tabulated sums and gaussian families satisfy the L log L moment
  // analytically
  rep.as3 = true;
  rep.as4 = law.kind != LawKind::tabulated || !tabulated_is_lattice(law);
  return rep;
}

}  // namespace brwld
