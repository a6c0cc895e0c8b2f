#pragma once

#include "dynastep/controller.hpp"
#include "dynastep/model.hpp"
#include "dynastep/sim.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dynastep {

/// Convergence targets a scenario is expected to meet under its default SimConfig.
struct Expectations {
  std::optional<double> state_threshold;  ///< infinity norm of the plant states
  double state_by = 0.0;
  std::optional<double> residual_threshold;  ///< |h1|, |h2| (scaled where applicable)
  double residual_by = 0.0;
  std::optional<double> tracking_threshold;  ///< |x1 - r|
  double tracking_after = 0.0;
  double max_violation_fraction = 0.01;
};

/// Optional overrides applied when building a scenario. Scalar gains are used as k * I.
struct ScenarioParams {
  std::optional<double> K1, K2, K3, Kv1, Kv2;
  std::optional<double> sigma;
  std::optional<std::vector<double>> x0;
  std::optional<double> x2d0, u0;
  std::optional<Kappa2Variant> kappa2_variant;
  std::optional<X2dDotVariant> x2d_dot_variant;
  std::optional<FirstOrderFactor> first_order_factor;
  std::optional<bool> scaling;
  std::optional<double> mu, r0, rdot0;
  std::optional<double> domain_bound;  ///< symmetric state box half-width
};

struct Scenario {
  std::string name;
  std::string description;
  CascadeModel model;
  ControllerSpec spec;
  SimConfig sim;
  std::vector<Vector> x0;
  Expectations expected;

  [[nodiscard]] DynamicBackstepping controller() const { return {model, spec}; }
  [[nodiscard]] AugmentedState initial(const DynamicBackstepping& ctrl) const {
    return ctrl.initial_state(x0);
  }
};

/// x1' = x1 + x2 + x2^3/5, x2' = x1 x2 + u + u^3/7, from (0.5, 0).
Scenario example1_stabilization(const ScenarioParams& p = {});

/// Jet engine surge model; R-level pure-feedback with 1/R residual scaling.
Scenario example2_jet_engine(const ScenarioParams& p = {});

/// Example 1 plant tracking a van der Pol reference.
Scenario example3_tracking(const ScenarioParams& p = {});

/// x1' = x1 (x1 + u + u^3) with the control stativized and 1/x1 scaling.
Scenario singular_scalar_example(const ScenarioParams& p = {});

/// Double integrator under classical backstepping.
Scenario strict_baseline_example(const ScenarioParams& p = {});

[[nodiscard]] const std::vector<std::string>& scenario_names();

/// Builds a scenario by CLI name; throws ConfigError for unknown names.
Scenario make_scenario(const std::string& name, const ScenarioParams& p = {});

}  // namespace dynastep
