#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace dynastep::cli;
  CLI::App app{"dynastep: dynamic backstepping workbench"};
  app.require_subcommand(1);

  RunOptions run;
  std::string scenario, config, outdir, plot;
  auto* run_cmd = app.add_subcommand("run", "simulate a scenario and write trajectory.csv and summary.txt");
  run_cmd->add_option("--scenario", scenario, "example1, example2, example3, singular-scalar, strict-baseline");
  run_cmd->add_option("--config", config, "key = value configuration file")->check(CLI::ExistingFile);
  run_cmd->add_option("--set", run.sets, "override, e.g. K1=2 or sim.dt=1e-4 (repeatable)");
  run_cmd->add_option("--outdir", outdir, "output directory (default $DYNASTEP_OUTDIR or dynastep-out)");
  run_cmd->add_option("--plot", plot, "also write plot.svg with these comma-separated channels");

  std::string csv, channels = "x1,x2", svg = "plot.svg";
  auto* plot_cmd = app.add_subcommand("plot", "render CSV channels as an SVG line chart");
  plot_cmd->add_option("csv", csv, "trajectory CSV")->required();
  plot_cmd->add_option("-c,--channels", channels, "comma-separated channel names");
  plot_cmd->add_option("-o,--out", svg, "output SVG path");

  std::string filter;
  bool serial = false;
  auto* verify_cmd = app.add_subcommand("verify", "run the acceptance checks");
  verify_cmd->add_option("--filter", filter, "only checks whose name or scenario contains this");
  verify_cmd->add_flag("--serial", serial, "run checks one after another");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kConfigError;
  }

  try {
    if (*run_cmd) {
      if (!scenario.empty()) run.scenario = scenario;
      if (!config.empty()) run.config_path = config;
      if (!outdir.empty()) run.outdir = outdir;
      if (!plot.empty()) run.plot = plot;
      return run_command(run, std::cout, std::cerr);
    }
    if (*plot_cmd) return plot_command(csv, channels, svg, std::cout, std::cerr);
    return verify_command(filter, serial, std::cout);
  } catch (const dynastep::ConfigError&) {
    return kConfigError;
  } catch (const dynastep::DimensionError&) {
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
}
