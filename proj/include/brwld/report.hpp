// Canonical JSON report emission shared by the CLI and the validation suite.
// The timing sub-record is excluded from the config digest so repeated runs
// with one seed/config are byte-identical everywhere else.
#pragma once

#include <string>

#include "json.hpp"

#include "brwld/harness.hpp"

namespace brwld {

using json = nlohmann::ordered_json;

inline constexpr const char* tool_version = "0.1.0";

inline json estimate_json(const EstimateRecord& rec) {
  json e;
  e["mean"] = rec.mean;
  e["stderr"] = rec.stderr_;
  e["replicas"] = rec.replicas;
  e["invalid_replicas"] = rec.invalid_replicas;
  e["bias_bound"] = rec.bias_bound;
  return e;
}

// Full report record.  `seconds < 0` omits the timing block (used when
// comparing reports for byte identity).
inline json make_report(const std::string& command, const json& config, const json& estimate,
                        const json& diagnostics, std::uint64_t seed, double seconds) {
  json rep;
  rep["command"] = command;
  rep["config"] = config;
  rep["estimate"] = estimate;
  rep["diagnostics"] = diagnostics;
  rep["seed"] = seed;
  rep["config_digest"] = config_digest(command + "\x1f" + config.dump());
  rep["tool_version"] = tool_version;
  if (seconds >= 0.0) rep["timing"] = json{{"seconds", seconds}};
  return rep;
}

// the digest-relevant part: everything except timing
inline std::string report_body(json rep) {
  rep.erase("timing");
  return rep.dump(2);
}

}  // namespace brwld
