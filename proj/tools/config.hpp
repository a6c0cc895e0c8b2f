#pragma once

#include "dynastep/scenarios.hpp"

#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace dynastep::cli {

/// SimConfig fields the user overrode; applied on top of the scenario defaults.
struct SimOverrides {
  std::optional<Integrator> integrator;
  std::optional<double> dt, t_final, rtol, atol, dt_max, abort_threshold;
  std::optional<std::size_t> sample_every;

  void apply(SimConfig& cfg) const;
};

struct RunConfig {
  std::string scenario;
  std::optional<std::string> outdir;
  std::vector<std::string> plot_channels;
  ScenarioParams params;
  SimOverrides sim;
};

/// Sets one key. `key` is either bare ("K1") or qualified ("gains.K1").
/// Throws ConfigError for unknown keys and unparsable values.
void set_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Parses `key = value` lines with optional [section] headers and # comments.
/// Errors are reported as ConfigError with "<origin>:<line>: " prefixes.
void parse_config(std::istream& in, const std::string& origin, RunConfig& cfg);

/// Applies a `key=value` override from the command line.
void apply_override(RunConfig& cfg, const std::string& assignment);

/// Every accepted key as "section.key".
[[nodiscard]] std::vector<std::string> known_keys();

}  // namespace dynastep::cli
