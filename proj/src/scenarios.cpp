#include "dynastep/scenarios.hpp"

#include <cmath>

namespace dynastep {

namespace {

Vector vec(double v) { return Vector::Constant(1, v); }
Matrix mat(double v) { return Matrix::Constant(1, 1, v); }

double at(Blocks b, std::size_t i) { return b[i](0); }

Matrix gain(const std::optional<double>& override_value, double fallback) {
  return mat(override_value.value_or(fallback));
}

std::vector<Vector> initial_blocks(const ScenarioParams& p, std::vector<double> fallback) {
  const std::vector<double>& v = p.x0 ? *p.x0 : fallback;
  if (v.size() != fallback.size()) {
    throw ConfigError("x0 needs " + std::to_string(fallback.size()) + " components");
  }
  std::vector<Vector> out;
  for (double c : v) out.push_back(vec(c));
  return out;
}

void apply_variants(const ScenarioParams& p, ControllerSpec& spec) {
  if (p.kappa2_variant) spec.kappa2_variant = *p.kappa2_variant;
  if (p.x2d_dot_variant) spec.x2d_dot_variant = *p.x2d_dot_variant;
  if (p.first_order_factor) spec.first_order_factor = *p.first_order_factor;
}

void reject(const ScenarioParams& p, const std::string& scenario, bool k3, bool kv1, bool kv2,
            bool sigma, bool scaling, bool reference, bool x2d0, bool u0) {
  auto no = [&](bool given, bool allowed, const char* key) {
    if (given && !allowed) throw ConfigError("'" + std::string(key) + "' does not apply to " + scenario);
  };
  no(p.K3.has_value(), k3, "K3");
  no(p.Kv1.has_value(), kv1, "Kv1");
  no(p.Kv2.has_value(), kv2, "Kv2");
  no(p.sigma.has_value(), sigma, "sigma");
  no(p.scaling.has_value(), scaling, "scaling");
  no(p.mu || p.r0 || p.rdot0, reference, "mu/r0/rdot0");
  no(p.x2d0.has_value(), x2d0, "x2d0");
  no(p.u0.has_value(), u0, "u0");
}

// x1' = x1 + x2 + x2^3/5, x2' = x1 x2 + u + u^3/7
CascadeModel example1_plant(double state_bound) {
  auto f1 = [](Blocks b) {
    const double x2 = at(b, 1);
    return vec(at(b, 0) + x2 + x2 * x2 * x2 / 5.0);
  };
  auto f2 = [](Blocks b) {
    const double u = at(b, 2);
    return vec(at(b, 0) * at(b, 1) + u + u * u * u / 7.0);
  };
  std::vector<BlockMatrixField> j1{
      [](Blocks) { return mat(1.0); },
      [](Blocks b) { return mat(1.0 + 0.6 * at(b, 1) * at(b, 1)); },
  };
  std::vector<BlockMatrixField> j2{
      [](Blocks b) { return mat(at(b, 1)); },
      [](Blocks b) { return mat(at(b, 0)); },
      [](Blocks b) { return mat(1.0 + 3.0 / 7.0 * at(b, 2) * at(b, 2)); },
  };
  return CascadeModel(1,
                      {LevelDynamics::pure(f1, std::move(j1)), LevelDynamics::pure(f2, std::move(j2))},
                      DomainBox::uniform(2, 1, state_bound, 10.0));
}

}  // namespace

Scenario example1_stabilization(const ScenarioParams& p) {
  const std::string name = "example1";
  reject(p, name, false, true, true, false, false, false, true, true);
  ControllerSpec spec;
  spec.K = {gain(p.K1, 1.0), gain(p.K2, 1.0)};
  spec.Kv1 = gain(p.Kv1, 1.0);
  spec.Kv2 = gain(p.Kv2, 1.0);
  spec.x2d0 = vec(p.x2d0.value_or(0.0));
  spec.u0 = vec(p.u0.value_or(0.0));
  apply_variants(p, spec);

  Scenario sc{name,
              "pure-feedback stabilization, all gains 1, from (0.5, 0)",
              example1_plant(p.domain_bound.value_or(2.0)),
              std::move(spec),
              SimConfig{},
              initial_blocks(p, {0.5, 0.0}),
              {}};
  sc.sim.t_final = 15.0;
  sc.expected.state_threshold = 1e-2;
  sc.expected.state_by = 15.0;
  sc.expected.residual_threshold = 1e-3;
  sc.expected.residual_by = 10.0;
  return sc;
}

Scenario example3_tracking(const ScenarioParams& p) {
  const std::string name = "example3";
  reject(p, name, false, true, true, false, false, true, true, true);
  ControllerSpec spec;
  spec.K = {gain(p.K1, 1.0), gain(p.K2, 1.0)};
  spec.Kv1 = gain(p.Kv1, 1.0);
  spec.Kv2 = gain(p.Kv2, 1.0);
  spec.x2d0 = vec(p.x2d0.value_or(0.0));
  spec.u0 = vec(p.u0.value_or(0.0));
  spec.reference =
      ReferenceSignal::van_der_pol(p.mu.value_or(0.2), p.r0.value_or(0.5), p.rdot0.value_or(0.0));
  apply_variants(p, spec);

  CascadeModel plant = example1_plant(1.0);
  const double b = p.domain_bound.value_or(0.0);
  DomainBox box = plant.domain();
  box.lower << -(b > 0 ? b : 3.0), -(b > 0 ? b : 4.0);
  box.upper = -box.lower;
  std::vector<LevelDynamics> levels{plant.level(0), plant.level(1)};

  Scenario sc{name,
              "Example 1 plant tracking a van der Pol reference",
              CascadeModel(1, std::move(levels), box),
              std::move(spec),
              SimConfig{},
              initial_blocks(p, {0.5, 0.0}),
              {}};
  sc.sim.t_final = 40.0;
  sc.expected.residual_threshold = 1e-3;
  sc.expected.residual_by = 10.0;
  sc.expected.tracking_threshold = 5e-3;
  sc.expected.tracking_after = 10.0;
  return sc;
}

// R' = -s R^2 - s R (2 phi + phi^2)
// phi' = -3/2 phi^2 - 1/2 phi^3 - 3 R phi - 3 R - psi
// psi' = -u
Scenario example2_jet_engine(const ScenarioParams& p) {
  const std::string name = "example2";
  reject(p, name, true, true, false, true, true, false, true, false);
  const double sigma = p.sigma.value_or(1.0);
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  const double k1 = p.K1.value_or(1.0);

  auto f_r = [sigma](Blocks b) {
    const double r = at(b, 0), phi = at(b, 1);
    return vec(-sigma * r * r - sigma * r * (2.0 * phi + phi * phi));
  };
  std::vector<BlockMatrixField> j_r{
      [sigma](Blocks b) {
        const double r = at(b, 0), phi = at(b, 1);
        return mat(-2.0 * sigma * r - sigma * (2.0 * phi + phi * phi));
      },
      [sigma](Blocks b) { return mat(-sigma * at(b, 0) * (2.0 + 2.0 * at(b, 1))); },
  };
  auto f_phi = [](Blocks b) {
    const double r = at(b, 0), phi = at(b, 1);
    return vec(-1.5 * phi * phi - 0.5 * phi * phi * phi - 3.0 * r * phi - 3.0 * r);
  };
  std::vector<BlockMatrixField> j_phi{
      [](Blocks b) { return mat(-3.0 * at(b, 1) - 3.0); },
      [](Blocks b) {
        const double phi = at(b, 1);
        return mat(-3.0 * phi - 1.5 * phi * phi - 3.0 * at(b, 0));
      },
  };
  auto zero = [](Blocks) { return vec(0.0); };
  auto minus_one = [](Blocks) { return mat(-1.0); };
  auto zero_jac = [](Blocks) { return mat(0.0); };

  const double bound = p.domain_bound.value_or(0.0);
  DomainBox box = DomainBox::uniform(3, 1, 1.0, 1e5);
  if (bound > 0) {
    box = DomainBox::uniform(3, 1, bound, 1e5);
  } else {
    box.lower << -1.0, -3.0, -100.0;
    box.upper << 3.0, 6.0, 100.0;
  }
  CascadeModel model(1,
                     {LevelDynamics::pure(f_r, std::move(j_r)),
                      LevelDynamics::strict(f_phi, minus_one, std::move(j_phi)),
                      LevelDynamics::strict(zero, minus_one, {zero_jac, zero_jac, zero_jac})},
                     box);

  ControllerSpec spec;
  spec.K = {mat(k1), gain(p.K2, 1.0), gain(p.K3, 1.0)};
  spec.Kv1 = gain(p.Kv1, 1.0);
  spec.kappa1 = Kappa1::cubic();
  spec.x2d0 = vec(p.x2d0.value_or(0.0));
  apply_variants(p, spec);
  if (p.scaling.value_or(true)) {
    // h~ = h / R with the removable 1/R cancelled in closed form
    ResidualScaling sc;
    sc.scale = [](const Vector& x) { return mat(1.0 / x(0)); };
    sc.inverse = [](const Vector& x) { return mat(x(0)); };
    sc.scaled_field = [sigma](const Vector& x, const Vector& next) {
      const double phi = next(0);
      return vec(-sigma * x(0) - sigma * (2.0 * phi + phi * phi));
    };
    sc.scaled_kappa = [k1](const Vector& x, const Vector& e) { return vec(-k1 * x(0) * e(0)); };
    spec.residual_scaling = std::move(sc);
  }

  Scenario sc{name,
              "jet engine surge model, sigma = " + std::to_string(sigma),
              std::move(model),
              std::move(spec),
              SimConfig{},
              initial_blocks(p, {2.0, 5.0, -5.0}),
              {}};
  sc.sim.t_final = 20.0;
  sc.expected.state_threshold = 1e-2;
  sc.expected.state_by = 20.0;
  sc.expected.residual_threshold = 1e-3;
  sc.expected.residual_by = 15.0;
  return sc;
}

// x1' = x1 (x1 + u + u^3)
Scenario singular_scalar_example(const ScenarioParams& p) {
  const std::string name = "singular-scalar";
  reject(p, name, false, true, false, false, true, false, false, true);
  if (p.K2) throw ConfigError("'K2' does not apply to " + name);
  const double k1 = p.K1.value_or(1.0);
  auto f = [](Blocks b) {
    const double x = at(b, 0), u = at(b, 1);
    return vec(x * (x + u + u * u * u));
  };
  std::vector<BlockMatrixField> jac{
      [](Blocks b) {
        const double x = at(b, 0), u = at(b, 1);
        return mat(2.0 * x + u + u * u * u);
      },
      [](Blocks b) {
        const double u = at(b, 1);
        return mat(at(b, 0) * (1.0 + 3.0 * u * u));
      },
  };
  const double bound = p.domain_bound.value_or(1.0);
  CascadeModel model(1, {LevelDynamics::pure(f, std::move(jac))},
                     DomainBox::uniform(1, 1, bound, 3.0));

  ControllerSpec spec;
  spec.K = {mat(k1)};
  spec.Kv1 = gain(p.Kv1, 1.0);
  spec.u0 = vec(p.u0.value_or(0.0));
  apply_variants(p, spec);
  if (p.scaling.value_or(true)) {
    ResidualScaling sc;
    sc.scale = [](const Vector& x) { return mat(1.0 / x(0)); };
    sc.inverse = [](const Vector& x) { return mat(x(0)); };
    sc.scaled_field = [](const Vector& x, const Vector& u) {
      return vec(x(0) + u(0) + u(0) * u(0) * u(0));
    };
    sc.scaled_kappa = [k1](const Vector&, const Vector&) { return vec(-k1); };
    spec.residual_scaling = std::move(sc);
  }

  Scenario sc{name,
              "scalar plant with a removable singularity at x1 = 0",
              std::move(model),
              std::move(spec),
              SimConfig{},
              initial_blocks(p, {0.5}),
              {}};
  sc.sim.t_final = 40.0;
  sc.expected.state_threshold = 1e-3;
  sc.expected.state_by = 40.0;
  sc.expected.residual_threshold = 1e-3;
  sc.expected.residual_by = 20.0;
  return sc;
}

// x1' = x2, x2' = u
Scenario strict_baseline_example(const ScenarioParams& p) {
  const std::string name = "strict-baseline";
  reject(p, name, false, false, false, false, false, false, false, false);
  if (p.kappa2_variant || p.x2d_dot_variant || p.first_order_factor) {
    throw ConfigError("controller variants do not apply to " + name);
  }
  auto zero = [](Blocks) { return vec(0.0); };
  auto one = [](Blocks) { return mat(1.0); };
  auto zero_jac = [](Blocks) { return mat(0.0); };
  const double bound = p.domain_bound.value_or(2.0);
  CascadeModel model(1,
                     {LevelDynamics::strict(zero, one, {zero_jac}),
                      LevelDynamics::strict(zero, one, {zero_jac, zero_jac})},
                     DomainBox::uniform(2, 1, bound, 10.0));
  ControllerSpec spec;
  spec.K = {gain(p.K1, 1.0), gain(p.K2, 1.0)};

  Scenario sc{name,
              "double integrator under classical backstepping",
              std::move(model),
              std::move(spec),
              SimConfig{},
              initial_blocks(p, {1.0, 0.0}),
              {}};
  sc.sim.t_final = 12.0;
  sc.expected.state_threshold = 1e-3;
  sc.expected.state_by = 12.0;
  return sc;
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"example1", "example2", "example3",
                                              "singular-scalar", "strict-baseline"};
  return names;
}

Scenario make_scenario(const std::string& name, const ScenarioParams& p) {
  if (name == "example1") return example1_stabilization(p);
  if (name == "example2") return example2_jet_engine(p);
  if (name == "example3") return example3_tracking(p);
  if (name == "singular-scalar") return singular_scalar_example(p);
  if (name == "strict-baseline") return strict_baseline_example(p);
  std::string known;
  for (const auto& n : scenario_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown scenario '" + name + "' (known: " + known + ")");
}

}  // namespace dynastep
