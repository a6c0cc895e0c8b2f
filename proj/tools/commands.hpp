#pragma once

#include "config.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dynastep::cli {

enum ExitCode : int { kCompleted = 0, kConfigError = 1, kAborted = 2 };

struct RunOptions {
  std::optional<std::string> scenario;
  std::optional<std::string> config_path;
  std::optional<std::string> outdir;
  std::vector<std::string> sets;
  std::optional<std::string> plot;  ///< comma-separated channels
};

/// Resolves file, flags and overrides into one configuration.
RunConfig resolve(const RunOptions& opts);

/// Output directory: flag, then config, then $DYNASTEP_OUTDIR, then "dynastep-out".
std::string resolve_outdir(const RunConfig& cfg);

int run_command(const RunOptions& opts, std::ostream& out, std::ostream& err);

int plot_command(const std::string& csv_path, const std::string& channels,
                 const std::string& svg_path, std::ostream& out, std::ostream& err);

int verify_command(const std::string& filter, bool serial, std::ostream& out);

/// Human-readable run summary written to summary.txt.
std::string summary_text(const Scenario& sc, const DynamicBackstepping& ctrl,
                         const Trajectory& traj);

std::vector<std::string> split_channels(const std::string& list);

}  // namespace dynastep::cli
