// Command-line front end: reproduction-law diagnostics, forward simulation,
// tail estimation, decoration sampling and the validation suite.  All
// commands emit a canonical JSON record (CSV for decoration atom dumps).
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <sys/stat.h>
#include <vector>

#include "CLI11.hpp"

#include "brwld/brwld.hpp"

namespace {

using brwld::json;

std::string load_law_text(const std::string& spec) {
  struct stat st{};
  if (stat(spec.c_str(), &st) == 0) {
    std::ifstream in(spec);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }
  return spec;   // inline law text
}

struct Output {
  std::string path;      // empty = stdout
  std::string format = "json";

  void emit(const json& report) const {
    const std::string text = report.dump(2) + "\n";
    if (path.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(path);
      out << text;
    }
  }

  void emit_csv(const std::string& text) const {
    if (path.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(path);
      out << text;
    }
  }
};

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

std::vector<int> parse_int_grid(const std::string& s) {
  std::vector<int> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(std::stoi(tok));
  return out;
}

std::vector<double> parse_double_grid(const std::string& s) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"branching random walk tail estimation toolkit"};
  app.require_subcommand(1);

  std::string law_spec, grid_spec, method = "spinal", variant = "weighted", tier = "fast";
  std::string gkind = "exp_tail";
  double theta = 1.0, y = 0.0, a = std::numeric_limits<double>::quiet_NaN();
  double window = 0.0, prune_delta = 1e-12, width = 0.5;
  int n = 10, criterion = 0;
  std::uint64_t replicas = 10000, seed = 1, cap = 1'000'000;
  Output out;

  auto add_common = [&](CLI::App* cmd, bool wants_law) {
    if (wants_law) cmd->add_option("--law", law_spec, "law file path or inline spec")->required();
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--out", out.path, "output file (default stdout)");
    cmd->add_option("--format", out.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
  };

  auto* c_cum = app.add_subcommand("cumulants", "log-Laplace transform and tilted cumulants");
  add_common(c_cum, true);
  c_cum->add_option("--theta", theta);

  auto* c_check = app.add_subcommand("check", "standing assumptions at theta");
  add_common(c_check, true);
  c_check->add_option("--theta", theta);

  auto* c_sim = app.add_subcommand("simulate", "forward simulation of the branching random walk");
  add_common(c_sim, true);
  c_sim->add_option("--n", n);
  c_sim->add_option("--cap", cap);
  c_sim->add_option("--replicas", replicas);

  auto* c_tail = app.add_subcommand("tail", "P(M_n >= a), several methods");
  add_common(c_tail, true);
  c_tail->add_option("--theta", theta);
  c_tail->add_option("--n", n);
  c_tail->add_option("--y", y, "threshold offset from n psi'(theta)");
  c_tail->add_option("--a", a, "absolute threshold (overrides --y)");
  c_tail->add_option("--replicas", replicas);
  c_tail->add_option("--prune-delta", prune_delta);
  c_tail->add_option("--cap", cap);
  c_tail->add_option("--method", method)
      ->check(CLI::IsMember({"naive", "spinal", "enumerate", "asymptotic"}));

  auto* c_ct = app.add_subcommand("ctheta", "decoration constant C(theta)");
  add_common(c_ct, true);
  c_ct->add_option("--theta", theta);
  c_ct->add_option("--n", n, "auxiliary depth n_max");
  c_ct->add_option("--replicas", replicas);
  c_ct->add_option("--prune-delta", prune_delta);
  c_ct->add_option("--cap", cap);
  c_ct->add_option("--variant", variant)->check(CLI::IsMember({"weighted", "indicator"}));

  auto* c_dec = app.add_subcommand("decoration", "rejection-sample the decoration process");
  add_common(c_dec, true);
  c_dec->add_option("--theta", theta);
  c_dec->add_option("--n", n, "auxiliary depth n_max");
  c_dec->add_option("--replicas", replicas, "target accepted samples");
  c_dec->add_option("--window", window, "keep atoms in [-window, 0]");
  c_dec->add_option("--prune-delta", prune_delta);
  c_dec->add_option("--cap", cap);

  auto* c_ov = app.add_subcommand("overshoot", "conditioned overshoot vs Exp(theta)");
  add_common(c_ov, true);
  c_ov->add_option("--theta", theta);
  c_ov->add_option("--n", n);
  c_ov->add_option("--replicas", replicas);
  c_ov->add_option("--prune-delta", prune_delta);
  c_ov->add_option("--cap", cap);

  auto* c_gw = app.add_subcommand("gw", "Galton-Watson survival of the offspring counts");
  add_common(c_gw, true);
  c_gw->add_option("--n", n);

  auto* c_llt = app.add_subcommand("llt", "local-limit scaling of the tilted walk");
  add_common(c_llt, true);
  c_llt->add_option("--theta", theta);
  c_llt->add_option("--n", n);
  c_llt->add_option("--y", y);
  c_llt->add_option("--replicas", replicas);
  c_llt->add_option("--gkind", gkind)->check(CLI::IsMember({"exp_tail", "interval"}));
  c_llt->add_option("--width", width, "interval width h");

  auto* c_rate = app.add_subcommand("rate", "large-deviations rate regression");
  add_common(c_rate, true);
  c_rate->add_option("--a", a, "speed x in P(M_n >= nx)")->required();
  c_rate->add_option("--grid", grid_spec, "comma-separated n grid")->required();
  c_rate->add_option("--replicas", replicas);

  auto* c_sweep = app.add_subcommand("sweep", "C(theta) over a theta grid");
  add_common(c_sweep, true);
  c_sweep->add_option("--grid", grid_spec, "comma-separated theta grid")->required();
  c_sweep->add_option("--n", n, "auxiliary depth n_max");
  c_sweep->add_option("--replicas", replicas);
  c_sweep->add_option("--variant", variant)->check(CLI::IsMember({"weighted", "indicator"}));

  auto* c_val = app.add_subcommand("validate", "acceptance suite");
  add_common(c_val, false);
  c_val->add_option("--tier", tier)->check(CLI::IsMember({"fast", "full"}));
  c_val->add_option("--criterion", criterion, "run a single criterion (1..11)");

  CLI11_PARSE(app, argc, argv);

  try {
    Timer timer;
    const brwld::SpinalOptions sopt{prune_delta, cap};

    if (c_cum->parsed()) {
      const auto law = brwld::parse_law(load_law_text(law_spec));
      const auto cum = brwld::tilted_cumulants(law, theta);
      const auto xs = brwld::critical_speed(law);
      json cfg{{"law", load_law_text(law_spec)}, {"theta", theta}};
      json diag{{"psi", cum.psi},     {"psi_prime", cum.psi_prime}, {"sigma2", cum.sigma2},
                {"rate", cum.rate},   {"x_star", xs.x_star},        {"x_star_solvable", xs.solvable},
                {"mean_count", law.mean_count()}};
      out.emit(brwld::make_report("cumulants", cfg, json::object(), diag, seed, timer.seconds()));
    } else if (c_check->parsed()) {
      const auto law = brwld::parse_law(load_law_text(law_spec));
      const auto rep = brwld::check_assumptions(law, theta);
      json cfg{{"law", load_law_text(law_spec)}, {"theta", theta}};
      json diag{{"asn", rep.asn}, {"as1", rep.as1}, {"as2", rep.as2}, {"as3", rep.as3},
                {"as4", rep.as4}, {"psi0", rep.psi0}, {"criticality", rep.criticality}};
      out.emit(brwld::make_report("check", cfg, json::object(), diag, seed, timer.seconds()));
    } else if (c_sim->parsed()) {
      const auto law = brwld::parse_law(load_law_text(law_spec));
      json cfg{{"law", load_law_text(law_spec)}, {"n", n}, {"cap", cap}, {"replicas", replicas}};
      // survival frequency plus the per-generation profile of one replica
      const auto rec = brwld::run_replicas(seed, replicas, [&](brwld::Stream& stream, std::uint64_t) {
        brwld::ReplicaOutcome o;
        const auto gens = brwld::run_forward(law, n, cap, stream);
        if (gens.back().capped) {
          o.valid = false;
          return o;
        }
        o.value = gens.back().m_n ? 1.0 : 0.0;
        return o;
      });
      const auto gens = brwld::run_forward(law, n, cap, brwld::derive_stream(seed, 0));
      json profile = json::array();
      for (const auto& g : gens) {
        json row{{"n", g.n}, {"population", g.population}};
        if (g.m_n) row["max"] = *g.m_n;
        profile.push_back(row);
      }
      json diag{{"survival_frequency", rec.mean}, {"first_replica_profile", profile}};
      out.emit(brwld::make_report("simulate", cfg, brwld::estimate_json(rec), diag, seed,
                                  timer.seconds()));
    } else if (c_tail->parsed()) {
      const auto law = brwld::parse_law(load_law_text(law_spec));
      const auto cum = brwld::tilted_cumulants(law, theta);
      const bool have_a = !std::isnan(a);
      const double yy = have_a ? a - static_cast<double>(n) * cum.psi_prime : y;
      const double aa = have_a ? a : static_cast<double>(n) * cum.psi_prime + y;
      json cfg{{"law", load_law_text(law_spec)}, {"theta", theta}, {"n", n},
               {"y", yy},  {"a", aa}, {"replicas", replicas}, {"method", method},
               {"prune_delta", prune_delta}, {"cap", cap}};
      json diag{{"psi", cum.psi}, {"psi_prime", cum.psi_prime}, {"rate", cum.rate}};
      if (method == "spinal") {
        const auto rec = brwld::spinal_tail(law, theta, n, yy, replicas, seed, sopt);
        out.emit(brwld::make_report("tail", cfg, brwld::estimate_json(rec), diag, seed,
                                    timer.seconds()));
      } else if (method == "naive") {
        const auto rec = brwld::naive_tail(law, n, aa, replicas, seed, cap);
        out.emit(brwld::make_report("tail", cfg, brwld::estimate_json(rec), diag, seed,
                                    timer.seconds()));
      } else if (method == "enumerate") {
        const brwld::Rational exact =
            brwld::enumerate_tail(law, n, brwld::detail::parse_rational(std::to_string(aa)));
        std::ostringstream frac;
        frac << exact.numerator() << "/" << exact.denominator();
        diag["exact"] = frac.str();
        json est{{"mean", brwld::to_double(exact)}, {"stderr", 0.0}, {"replicas", 0},
                 {"invalid_replicas", 0}, {"bias_bound", 0.0}};
        out.emit(brwld::make_report("tail", cfg, est, diag, seed, timer.seconds()));
      } else {   // asymptotic
        const auto ct = brwld::c_theta(law, theta, 60, replicas, brwld::CThetaVariant::weighted,
                                       seed, sopt);
        diag["c_estimate"] = ct.estimate.mean;
        diag["c_stderr"] = ct.estimate.stderr_;
        const double p = brwld::asymptotic_tail(cum, ct.estimate.mean, n, yy);
        json est{{"mean", p}, {"stderr", p * ct.estimate.stderr_ / ct.estimate.mean},
                 {"replicas", ct.estimate.replicas}, {"invalid_replicas", ct.estimate.invalid_replicas},
                 {"bias_bound", ct.estimate.bias_bound}};
        out.emit(brwld::make_report("tail", cfg, est, diag, seed, timer.seconds()));
      }
    } else if (c_ct->parsed()) {
      const auto law = brwld::parse_law(load_law_text(law_spec));
      const auto v = variant == "weighted" ? brwld::CThetaVariant::weighted
                                           : brwld::CThetaVariant::indicator;
      const auto res = brwld::c_theta(law, theta, n, replicas, v, seed, sopt);
      json cfg{{"law", load_law_text(law_spec)}, {"theta", theta}, {"n", n},
               {"replicas", replicas}, {"variant", variant}, {"prune_delta", prune_delta},
               {"cap", cap}};
      json diag{{"as1_ok", res.as1_ok},
                {"last_contributing_generation",
                 {{"q50", res.lcg_q50}, {"q90", res.lcg_q90}, {"q99", res.lcg_q99},
                  {"q999", res.lcg_q999}}}};
      if (!res.as1_ok)
        diag["warning"] = "theta psi' <= psi: auxiliary atoms do not drift away, estimate is not meaningful";
      out.emit(brwld::make_report("ctheta", cfg, brwld::estimate_json(res.estimate), diag, seed,
                                  timer.seconds()));
    } else if (c_dec->parsed()) {
      const auto law = brwld::parse_law(load_law_text(law_spec));
      const double w = window > 0.0 ? window : 10.0 / theta;
      const auto batch = brwld::sample_decoration(law, theta, n, replicas, w, seed, sopt);
      if (out.format == "csv") {
        std::ostringstream csv;
        csv << "sample_id,location,multiplicity\n";
        for (std::size_t s = 0; s < batch.samples.size(); ++s)
          for (const auto& atom : batch.samples[s].atoms.atoms)
            csv << s << "," << atom.x << "," << atom.mult << "\n";
        out.emit_csv(csv.str());
      } else {
        json cfg{{"law", load_law_text(law_spec)}, {"theta", theta}, {"n", n},
                 {"replicas", replicas}, {"window", w}, {"prune_delta", prune_delta}, {"cap", cap}};
        json est{{"mean", batch.acceptance_rate}, {"stderr", batch.acceptance_stderr},
                 {"replicas", batch.attempts}, {"invalid_replicas", batch.invalid},
                 {"bias_bound", 0.0}};
        json samples = json::array();
        for (const auto& s : batch.samples) {
          json atoms = json::array();
          for (const auto& atom : s.atoms.atoms)
            atoms.push_back(json{{"x", atom.x}, {"mult", atom.mult}});
          samples.push_back(atoms);
        }
        json diag{{"accepted", batch.samples.size()}, {"attempts", batch.attempts},
                  {"window_too_small", batch.window_too_small}, {"samples", samples}};
        out.emit(brwld::make_report("decoration", cfg, est, diag, seed, timer.seconds()));
      }
    } else if (c_ov->parsed()) {
      const auto law = brwld::parse_law(load_law_text(law_spec));
      const auto res = brwld::conditioned_overshoot(law, theta, n, replicas, seed, sopt);
      json cfg{{"law", load_law_text(law_spec)}, {"theta", theta}, {"n", n},
               {"replicas", replicas}, {"prune_delta", prune_delta}, {"cap", cap}};
      json est{{"mean", res.weighted_mean}, {"stderr", res.weighted_stderr},
               {"replicas", res.samples.size()}, {"invalid_replicas", res.invalid},
               {"bias_bound", 0.0}};
      json diag{{"ks_distance_vs_exp", res.ks_distance},
                {"exponential_mean", 1.0 / theta},
                {"accepted_samples", res.samples.size()}};
      out.emit(brwld::make_report("overshoot", cfg, est, diag, seed, timer.seconds()));
    } else if (c_gw->parsed()) {
      const auto law = brwld::parse_law(load_law_text(law_spec));
      const auto counts = law.count_distribution();
      const double s = brwld::gw_survival(counts, n);
      json cfg{{"law", load_law_text(law_spec)}, {"n", n}};
      json est{{"mean", s}, {"stderr", 0.0}, {"replicas", 0}, {"invalid_replicas", 0},
               {"bias_bound", 0.0}};
      json diag{{"log_mean_offspring", std::log(law.mean_count())}};
      if (n > 0) diag["log_survival_over_n"] = std::log(s) / static_cast<double>(n);
      out.emit(brwld::make_report("gw", cfg, est, diag, seed, timer.seconds()));
    } else if (c_llt->parsed()) {
      const auto law = brwld::parse_law(load_law_text(law_spec));
      const auto kind = gkind == "exp_tail" ? brwld::LltKind::exp_tail : brwld::LltKind::interval;
      const auto res = brwld::llt_check(law, theta, n, kind, width, y, replicas, seed);
      json cfg{{"law", load_law_text(law_spec)}, {"theta", theta}, {"n", n}, {"y", y},
               {"replicas", replicas}, {"gkind", gkind}, {"width", width}};
      json diag{{"analytic_limit", res.limit}};
      out.emit(brwld::make_report("llt", cfg, brwld::estimate_json(res.estimate), diag, seed,
                                  timer.seconds()));
    } else if (c_rate->parsed()) {
      const auto law = brwld::parse_law(load_law_text(law_spec));
      const auto grid = parse_int_grid(grid_spec);
      const auto res = brwld::ldp_rate(law, a, grid, replicas, seed, sopt);
      json cfg{{"law", load_law_text(law_spec)}, {"x", a}, {"grid", grid},
               {"replicas", replicas}};
      json est{{"mean", res.slope}, {"stderr", 0.0}, {"replicas", replicas},
               {"invalid_replicas", 0}, {"bias_bound", 0.0}};
      json diag{{"psi_star", res.psi_star}, {"theta", res.theta}, {"log_p", res.log_p}};
      out.emit(brwld::make_report("rate", cfg, est, diag, seed, timer.seconds()));
    } else if (c_sweep->parsed()) {
      const auto law = brwld::parse_law(load_law_text(law_spec));
      const auto thetas = parse_double_grid(grid_spec);
      const auto v = variant == "weighted" ? brwld::CThetaVariant::weighted
                                           : brwld::CThetaVariant::indicator;
      json points = json::array();
      double max_jump_sigma = 0.0;
      double prev_mean = 0.0, prev_se = 0.0;
      for (std::size_t i = 0; i < thetas.size(); ++i) {
        const auto res = brwld::c_theta(law, thetas[i], n, replicas, v,
                                        seed + 1000 * (i + 1), sopt);
        points.push_back(json{{"theta", thetas[i]}, {"mean", res.estimate.mean},
                              {"stderr", res.estimate.stderr_}, {"as1_ok", res.as1_ok}});
        if (i > 0) {
          const double comb = std::sqrt(prev_se * prev_se +
                                        res.estimate.stderr_ * res.estimate.stderr_);
          if (comb > 0.0)
            max_jump_sigma = std::max(max_jump_sigma,
                                      std::abs(res.estimate.mean - prev_mean) / comb);
        }
        prev_mean = res.estimate.mean;
        prev_se = res.estimate.stderr_;
      }
      json cfg{{"law", load_law_text(law_spec)}, {"grid", thetas}, {"n", n},
               {"replicas", replicas}, {"variant", variant}};
      json diag{{"points", points}, {"max_adjacent_jump_sigmas", max_jump_sigma}};
      out.emit(brwld::make_report("sweep", cfg, json::object(), diag, seed, timer.seconds()));
    } else if (c_val->parsed()) {
      const auto t = tier == "full" ? brwld::Tier::full : brwld::Tier::fast;
      std::vector<brwld::CriterionResult> results;
      if (criterion > 0)
        results.push_back(brwld::run_criterion(criterion, t, seed));
      else
        results = brwld::run_validate(t, seed);
      bool all_pass = true;
      json rows = json::array();
      for (const auto& r : results) {
        all_pass = all_pass && r.pass;
        std::cerr << (r.pass ? "PASS" : "FAIL") << " criterion " << r.id << " (" << r.name
                  << ") [" << r.seconds << " s]\n";
        rows.push_back(json{{"id", r.id}, {"name", r.name}, {"pass", r.pass},
                            {"detail", r.detail}, {"seconds", r.seconds}});
      }
      json cfg{{"tier", tier}, {"criterion", criterion}};
      json diag{{"criteria", rows}, {"all_pass", all_pass}};
      out.emit(brwld::make_report("validate", cfg, json::object(), diag, seed, timer.seconds()));
      return all_pass ? 0 : 1;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
