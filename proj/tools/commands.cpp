#include "commands.hpp"

#include "checks.hpp"
#include "plot.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace dynastep::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

}  // namespace

std::vector<std::string> split_channels(const std::string& list) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(list);
  while (std::getline(is, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    out.push_back(item.substr(first, item.find_last_not_of(" \t") - first + 1));
  }
  return out;
}

RunConfig resolve(const RunOptions& opts) {
  RunConfig cfg;
  if (opts.config_path) {
    std::ifstream in(*opts.config_path);
    if (!in) throw ConfigError("cannot open config file " + *opts.config_path);
    parse_config(in, *opts.config_path, cfg);
  }
  if (opts.scenario) cfg.scenario = *opts.scenario;
  for (const auto& s : opts.sets) apply_override(cfg, s);
  if (opts.outdir) cfg.outdir = *opts.outdir;
  if (opts.plot) cfg.plot_channels = split_channels(*opts.plot);
  if (cfg.scenario.empty()) throw ConfigError("no scenario given (use --scenario or scenario = ...)");
  return cfg;
}

std::string resolve_outdir(const RunConfig& cfg) {
  if (cfg.outdir) return *cfg.outdir;
  if (const char* env = std::getenv("DYNASTEP_OUTDIR"); env != nullptr && *env != '\0') return env;
  return "dynastep-out";
}

std::string summary_text(const Scenario& sc, const DynamicBackstepping& ctrl,
                         const Trajectory& traj) {
  std::ostringstream os;
  os << "scenario: " << sc.name << "\n";
  os << "description: " << sc.description << "\n";
  os << "termination: " << to_string(traj.termination) << "\n";
  if (!traj.message.empty()) os << "message: " << traj.message << "\n";
  os << "samples: " << traj.size() << "\n";
  if (!traj.times.empty()) {
    const AugmentedState& last = traj.states.back();
    double xn = 0.0;
    for (const Vector& x : last.x) xn = std::max(xn, inf_norm(x));
    double hn = 0.0;
    for (const Vector& h : traj.residuals.back()) hn = std::max(hn, inf_norm(h));
    os << "t_end: " << num(last.t) << "\n";
    os << "final_state_inf_norm: " << num(xn) << "\n";
    os << "final_residual_inf_norm: " << num(hn) << "\n";
    os << "final_control_inf_norm: " << num(inf_norm(traj.controls.back())) << "\n";
    os << "final_V: " << num(traj.lyapunov.back().V) << "\n";
  }
  if (traj.size() >= 3) {
    const DecreaseReport rep = monitor_decrease(traj);
    os << "lyapunov_checked_samples: " << rep.checked << "\n";
    os << "lyapunov_violation_fraction: " << num(rep.violation_fraction) << "\n";
    os << "lyapunov_max_excursion: " << num(rep.max_excursion) << "\n";
    if (rep.first_violation) os << "lyapunov_first_violation_t: " << num(*rep.first_violation) << "\n";
  }
  os << "gain_conditions_at_initial_state:";
  try {
    const GainConditionReport gc = ctrl.check_gain_conditions(sc.initial(ctrl));
    if (!gc.applicable) {
      os << " not applicable (first level is strict-affine)\n";
    } else {
      os << "\n  kv1_margin: " << num(gc.kv1_margin) << (gc.kv1_ok ? " (satisfied)" : " (violated)")
         << "\n  lipschitz_estimate: " << num(gc.lipschitz) << "\n";
      if (ctrl.layout().levels >= 2) {
        os << "  k2_bound: " << num(gc.k2_bound) << ", min eig K2: " << num(gc.k2_min_eig)
           << (gc.k2_ok ? " (satisfied)" : " (violated)") << "\n";
      }
    }
  } catch (const Error& e) {
    os << " unavailable: " << e.what() << "\n";
  }
  os << "warnings: " << traj.warning_count << "\n";
  for (const auto& w : traj.warnings) os << "  " << w << "\n";
  return os.str();
}

int run_command(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::optional<Scenario> scenario;
  std::optional<DynamicBackstepping> ctrl;
  try {
    cfg = resolve(opts);
    scenario.emplace(make_scenario(cfg.scenario, cfg.params));
    cfg.sim.apply(scenario->sim);
    scenario->sim.validate();
    ctrl.emplace(scenario->model, scenario->spec);
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  const Scenario& sc = *scenario;

  const Trajectory traj = simulate(*ctrl, sc.sim, sc.initial(*ctrl));

  const fs::path dir = resolve_outdir(cfg);
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / "trajectory.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + (dir / "trajectory.csv").string());
    write_csv(traj, csv);
  }
  write_file(dir / "summary.txt", summary_text(sc, *ctrl, traj));
  if (!cfg.plot_channels.empty()) {
    std::ostringstream csv;
    write_csv(traj, csv);
    std::istringstream in(csv.str());
    try {
      write_file(dir / "plot.svg", render_svg(read_csv(in), cfg.plot_channels, sc.name));
    } catch (const ConfigError& e) {
      err << "plot: " << e.what() << "\n";
      return kConfigError;
    }
  }

  out << sc.name << ": " << to_string(traj.termination);
  if (!traj.completed()) out << " (" << traj.message << ")";
  out << ", " << traj.size() << " samples written to " << (dir / "trajectory.csv").string() << "\n";
  return traj.completed() ? kCompleted : kAborted;
}

int plot_command(const std::string& csv_path, const std::string& channels,
                 const std::string& svg_path, std::ostream& out, std::ostream& err) {
  std::ifstream in(csv_path);
  if (!in) {
    err << "plot: cannot open " << csv_path << "\n";
    return kConfigError;
  }
  try {
    const CsvTable table = read_csv(in);
    const std::string svg = render_svg(table, split_channels(channels), fs::path(csv_path).stem().string());
    write_file(svg_path, svg);
  } catch (const ConfigError& e) {
    err << "plot: " << e.what() << "\n";
    return kConfigError;
  }
  out << "wrote " << svg_path << "\n";
  return kCompleted;
}

int verify_command(const std::string& filter, bool serial, std::ostream& out) {
  const auto selected = checks::select(filter);
  if (selected.empty()) {
    out << "no checks match '" << filter << "'\n";
    return 1;
  }
  const auto results = checks::run_all(selected, !serial);
  out << checks::format_table(results);
  for (const auto& r : results) {
    if (!r.pass) return 1;
  }
  return 0;
}

}  // namespace dynastep::cli
