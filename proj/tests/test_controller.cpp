#include "dynastep/controller.hpp"
#include "dynastep/scenarios.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace dynastep;

namespace {

Vector v1(double x) { return Vector::Constant(1, x); }
Matrix m1(double x) { return Matrix::Constant(1, 1, x); }

AugmentedState ex1_state(const DynamicBackstepping& c, double x1, double x2, double x2d, double u) {
  AugmentedState s = c.initial_state({v1(x1), v1(x2)});
  s.x2d = v1(x2d);
  s.u = v1(u);
  return s;
}

DynamicBackstepping ex1(const ScenarioParams& p = {}) { return example1_stabilization(p).controller(); }

// Hand forms for Example 1 with scalar gains.
double f1(double x1, double x2) { return x1 + x2 + x2 * x2 * x2 / 5.0; }
double f2(double x1, double x2, double u) { return x1 * x2 + u + u * u * u / 7.0; }

double x2d_dot_hand(double x1, double x2d, const oracle::Gains& g) {
  const double j = 1.0 + 0.6 * x2d * x2d;
  const double h1 = oracle::ex1_h1(x1, x2d, g);
  return -g.Kv1 * j * h1 - (1.0 / j) * ((1.0 + g.K1) * f1(x1, x2d) + x1);
}

double kappa2_hand(double x1, double x2, double x2d, const oracle::Gains& g) {
  const double b = 1.0 + 0.6 * x2 * x2;
  const double delta = f1(x1, x2) - f1(x1, x2d);
  const double gamma = -g.K2 * b * delta;
  const double h1 = oracle::ex1_h1(x1, x2d, g);
  const double p = 1.0 + 0.6 * x2d * x2d;
  return gamma - (1.0 / b) * (x1 + (1.0 + g.K1) * h1 - p * x2d_dot_hand(x1, x2d, g));
}

double u_dot_hand(double x1, double x2, double x2d, double u, const oracle::Gains& g, double kv2) {
  const double e = 1e-6;
  auto h2 = [&](double a, double b, double c, double d) { return oracle::ex1_h2(a, b, c, d, g); };
  const double hx1 = (h2(x1 + e, x2, x2d, u) - h2(x1 - e, x2, x2d, u)) / (2 * e);
  const double hx2 = (h2(x1, x2 + e, x2d, u) - h2(x1, x2 - e, x2d, u)) / (2 * e);
  const double hxd = (h2(x1, x2, x2d + e, u) - h2(x1, x2, x2d - e, u)) / (2 * e);
  const double hu = (h2(x1, x2, x2d, u + e) - h2(x1, x2, x2d, u - e)) / (2 * e);
  const double b = 1.0 + 0.6 * x2 * x2;
  const double drift = hx1 * f1(x1, x2) + hx2 * f2(x1, x2, u) + hxd * x2d_dot_hand(x1, x2d, g) +
                       b * (f1(x1, x2) - f1(x1, x2d));
  return -kv2 * hu * h2(x1, x2, x2d, u) - drift / hu;
}

}  // namespace

TEST(EvalH1, Example1HandValue) {
  const auto c = ex1();
  EXPECT_DOUBLE_EQ(c.eval_h1(ex1_state(c, 0.5, 0.0, 0.0, 0.0))(0), 1.0);
}

TEST(EvalH1, VanishesAtOrigin) {
  const auto c = ex1();
  EXPECT_EQ(c.eval_h1(ex1_state(c, 0, 0, 0, 0))(0), 0.0);
}

TEST(EvalH1, TrackingHandValue) {
  const auto c = example3_tracking().controller();
  AugmentedState s = c.initial_state({v1(0.5), v1(0.0)});
  s.x2d = v1(0.0);
  s.w << 0.5, 0.0;
  EXPECT_DOUBLE_EQ(c.eval_h1(s)(0), 0.5);
}

TEST(X2dDot, FullHandValue) {
  const auto c = ex1();
  EXPECT_NEAR(c.x2d_dot(ex1_state(c, 0.5, 0, 0, 0))(0), -2.5, 1e-12);
}

TEST(X2dDot, SimplifiedHandValue) {
  ScenarioParams p;
  p.x2d_dot_variant = X2dDotVariant::Simplified;
  const auto c = ex1(p);
  EXPECT_NEAR(c.x2d_dot(ex1_state(c, 0.5, 0, 0, 0))(0), -1.0, 1e-12);
}

TEST(X2dDot, ZeroWhenResidualAndStateVanish) {
  for (auto variant : {X2dDotVariant::Full, X2dDotVariant::Simplified}) {
    ScenarioParams p;
    p.x2d_dot_variant = variant;
    const auto c = ex1(p);
    EXPECT_EQ(c.x2d_dot(ex1_state(c, 0, 0.3, 0, 0))(0), 0.0);
  }
}

TEST(X2dDot, MatchesHandFormAtRandomStates) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1, 1), G(0.5, 3.0);
  for (int i = 0; i < 200; ++i) {
    const oracle::Gains g{G(rng), G(rng), G(rng)};
    ScenarioParams p;
    p.K1 = g.K1;
    p.K2 = g.K2;
    p.Kv1 = g.Kv1;
    const auto c = ex1(p);
    const double x1 = U(rng), x2d = U(rng);
    EXPECT_NEAR(c.x2d_dot(ex1_state(c, x1, U(rng), x2d, U(rng)))(0), x2d_dot_hand(x1, x2d, g), 1e-12);
  }
}

TEST(Kappa2, SimplifiedLipschitzHandValue) {
  ScenarioParams p;
  p.kappa2_variant = Kappa2Variant::SimplifiedLipschitz;
  p.x2d_dot_variant = X2dDotVariant::Simplified;
  const auto c = ex1(p);
  EXPECT_NEAR(c.kappa2(ex1_state(c, 0.5, 0.2, 0.0, 0.0))(0), -1.2, 1e-12);
}

TEST(Kappa2, FullVanishesWhenStatesCoincideAtRest) {
  const auto c = ex1();
  // x1 = 0 and x2 = x2d = 0 make h1 = 0 and every term vanish
  EXPECT_EQ(c.kappa2(ex1_state(c, 0, 0, 0, 0.4))(0), 0.0);
}

TEST(Kappa2, FullMatchesHandTranscriptionAndTranscribedResidual) {
  const auto c = ex1();
  const oracle::Gains g{};
  const double k2 = c.kappa2(ex1_state(c, 0.5, 0.0, 0.1, 0.0))(0);
  EXPECT_NEAR(k2, kappa2_hand(0.5, 0.0, 0.1, g), 1e-12);
  // transcribed residual rearranged: kappa2 = f2 - h2 for any u
  for (double u : {-0.7, 0.0, 0.9}) {
    EXPECT_NEAR(k2, f2(0.5, 0.0, u) - oracle::ex1_h2(0.5, 0.0, 0.1, u, g), 1e-12);
  }
}

TEST(Kappa2, FirstOrderFactorChoice) {
  const oracle::Gains g{};
  const double x1 = 0.4, x2 = 0.3, x2d = 0.6;
  const double j = 1.0 + 0.6 * x2d * x2d;
  const double h1 = oracle::ex1_h1(x1, x2d, g);
  const double coupling = x1 + 2.0 * h1;
  const double rate = x2d_dot_hand(x1, x2d, g);
  for (auto factor : {FirstOrderFactor::Transpose, FirstOrderFactor::InverseTranspose}) {
    ScenarioParams p;
    p.kappa2_variant = Kappa2Variant::SimplifiedFirstOrder;
    p.first_order_factor = factor;
    const auto c = ex1(p);
    const double lead = factor == FirstOrderFactor::Transpose ? j : 1.0 / j;
    EXPECT_NEAR(c.kappa2(ex1_state(c, x1, x2, x2d, 0))(0),
                -(x2 - x2d) - lead * coupling + rate, 1e-12);
  }
}

TEST(EvalH2, ZeroAtOrigin) {
  const auto c = ex1();
  EXPECT_EQ(c.eval_h2(ex1_state(c, 0, 0, 0, 0))(0), 0.0);
}

TEST(EvalH2, MatchesTranscribedResidualAtInitialState) {
  const auto c = ex1();
  EXPECT_NEAR(c.eval_h2(ex1_state(c, 0.5, 0, 0, 0))(0), oracle::ex1_h2(0.5, 0, 0, 0, {}), 1e-12);
}

TEST(EvalH2, MatchesTranscribedResidualForRandomGains) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(-1, 1), G(0.3, 4.0);
  for (int i = 0; i < 1000; ++i) {
    const oracle::Gains g{G(rng), G(rng), G(rng)};
    ScenarioParams p;
    p.K1 = g.K1;
    p.K2 = g.K2;
    p.Kv1 = g.Kv1;
    const auto c = ex1(p);
    const double x1 = U(rng), x2 = U(rng), x2d = U(rng), u = U(rng);
    ASSERT_NEAR(c.eval_h2(ex1_state(c, x1, x2, x2d, u))(0), oracle::ex1_h2(x1, x2, x2d, u, g), 1e-9);
  }
}

TEST(EvalH2, TrackingMatchesDerivedResidualNotTranscribedOne) {
  const auto c = example3_tracking().controller();
  AugmentedState s = c.initial_state({v1(0.3), v1(-0.2)});
  s.x2d = v1(0.1);
  s.u = v1(0.4);
  s.w << 0.6, -0.5;
  const double rdd = oracle::vdp_rddot(0.6, -0.5);
  const double h2 = c.eval_h2(s)(0);
  EXPECT_NEAR(h2, oracle::ex3_h2_derived(0.3, -0.2, 0.1, 0.4, 0.6, -0.5, rdd, {}), 1e-12);
  EXPECT_GT(std::abs(h2 - oracle::ex3_h2_transcribed(0.3, -0.2, 0.1, 0.4, 0.6, -0.5, rdd, {})), 0.1);
}

TEST(UDot, ZeroAtOrigin) {
  const auto c = ex1();
  EXPECT_NEAR(c.u_dot(ex1_state(c, 0, 0, 0, 0))(0), 0.0, 1e-14);
}

TEST(UDot, MatchesHandEvaluation) {
  const auto c = ex1();
  EXPECT_NEAR(c.u_dot(ex1_state(c, 0.5, 0, 0, 0))(0), u_dot_hand(0.5, 0, 0, 0, {}, 1.0), 1e-6);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int i = 0; i < 50; ++i) {
    const double x1 = U(rng), x2 = U(rng), x2d = U(rng), u = U(rng);
    const double expected = u_dot_hand(x1, x2, x2d, u, {}, 1.0);
    EXPECT_NEAR(c.u_dot(ex1_state(c, x1, x2, x2d, u))(0), expected, 1e-6 * std::max(1.0, std::abs(expected)));
  }
}

TEST(UDot, OnlyCouplingActsWhenResidualVanishes) {
  const auto c = ex1();
  const double x1 = 0.2, x2 = 0.5, x2d = -0.1;
  // h2 is strictly increasing in u; bisect for its root
  double lo = -10, hi = 10;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (c.eval_h2(ex1_state(c, x1, x2, x2d, mid))(0) > 0 ? hi : lo) = mid;
  }
  const AugmentedState s = ex1_state(c, x1, x2, x2d, 0.5 * (lo + hi));
  EXPECT_NEAR(c.eval_h2(s)(0), 0.0, 1e-12);
  const double rate = c.u_dot(s)(0);
  EXPECT_TRUE(std::isfinite(rate));
  EXPECT_GT(std::abs(rate), 1e-3);
}

TEST(StrictControl, DoubleIntegratorHandValue) {
  const auto c = strict_baseline_example().controller();
  const AugmentedState s = c.initial_state({v1(1.0), v1(0.0)});
  EXPECT_DOUBLE_EQ(c.strict_level_control(s)(0), -2.0);
  EXPECT_DOUBLE_EQ(c.virtual_controls(s)[0](0), -1.0);
  EXPECT_EQ(c.strict_level_control(c.initial_state({v1(0.0), v1(0.0)}))(0), 0.0);
}

TEST(StrictControl, TerminalGainScalesTheControl) {
  auto plant = [](double g2) {
    auto f0 = [](Blocks) { return Vector::Zero(1); };
    auto g0 = [](Blocks) { return m1(1.0); };
    auto f1 = [](Blocks b) { return Vector(b[0].array().square()); };
    auto g1 = [g2](Blocks) { return m1(g2); };
    return CascadeModel(1, {LevelDynamics::strict(f0, g0), LevelDynamics::strict(f1, g1)},
                        DomainBox::uniform(2, 1, 2.0, 10.0));
  };
  ControllerSpec spec;
  spec.K = {m1(1.0), m1(2.0)};
  const DynamicBackstepping unit(plant(1.0), spec);
  const DynamicBackstepping twice(plant(2.0), spec);
  const AugmentedState s = unit.initial_state({v1(0.7), v1(-0.3)});
  EXPECT_NEAR(unit.strict_level_control(s)(0), 2.0 * twice.strict_level_control(s)(0), 1e-12);
}

TEST(StrictControl, SingularGainIsReported) {
  auto f0 = [](Blocks) { return Vector::Zero(1); };
  auto g0 = [](Blocks b) { return m1(b[0](0)); };
  auto g1 = [](Blocks) { return m1(1.0); };
  const CascadeModel model(1, {LevelDynamics::strict(f0, g0), LevelDynamics::strict(f0, g1)},
                           DomainBox::uniform(2, 1, 2.0, 10.0));
  ControllerSpec spec;
  spec.K = {m1(1.0), m1(1.0)};
  const DynamicBackstepping c(model, spec);
  EXPECT_THROW((void)c.control(c.initial_state({v1(0.0), v1(0.5)})), SingularMatrix);
}

TEST(ScaledResidual, SingularScalarHandValue) {
  const auto c = singular_scalar_example().controller();
  AugmentedState s = c.initial_state({v1(2.0)});
  s.u = v1(0.0);
  EXPECT_DOUBLE_EQ(c.eval_h1(s)(0), 3.0);
}

TEST(ScaledResidual, JetEngineHandValue) {
  const auto c = example2_jet_engine().controller();
  const AugmentedState s = c.initial_state({v1(2.0), v1(5.0), v1(-5.0)});
  EXPECT_DOUBLE_EQ(c.eval_h1(s)(0), 2.0);
  EXPECT_DOUBLE_EQ(c.eval_h1(s)(0), oracle::ex2_h1_scaled(2.0, 0.0, 1.0, 1.0));
}

TEST(ScaledResidual, IdentityScalingChangesNothing) {
  Scenario plain = example1_stabilization();
  Scenario scaled = example1_stabilization();
  ResidualScaling id;
  id.scale = [](const Vector&) { return Matrix::Identity(1, 1); };
  scaled.spec.residual_scaling = id;
  const auto a = plain.controller();
  const auto b = scaled.controller();
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int i = 0; i < 20; ++i) {
    const AugmentedState s = ex1_state(a, U(rng), U(rng), U(rng), U(rng));
    EXPECT_NEAR(a.eval_h1(s)(0), b.eval_h1(s)(0), 1e-14);
    EXPECT_NEAR(a.x2d_dot(s)(0), b.x2d_dot(s)(0), 1e-7);
    EXPECT_NEAR(a.kappa2(s)(0), b.kappa2(s)(0), 1e-6);
  }
}

TEST(ScaledResidual, JacobianAtSingularPoint) {
  const Scenario sc = singular_scalar_example();
  // unscaled dh/du = x1 (1 + 3u^2) vanishes at x1 = 0, scaled dh~/du = 1 + 3u^2
  const std::vector<Vector> at_zero{v1(0.0), v1(0.0)};
  EXPECT_EQ(sc.model.jacobian(0, at_zero, 1)(0, 0), 0.0);
  const auto c = sc.controller();
  AugmentedState s = c.initial_state({v1(0.0)});
  s.u = v1(0.0);
  EXPECT_NO_THROW((void)c.u_dot(s));
  ScenarioParams off;
  off.scaling = false;
  const auto raw = singular_scalar_example(off).controller();
  EXPECT_THROW((void)raw.u_dot(s), SingularJacobian);
  EXPECT_THROW((void)raw.x2d_dot(s), SingularJacobian);
}

TEST(ClosedLoop, OriginIsFixedForStabilizationScenarios) {
  for (const char* name : {"example1", "example2", "strict-baseline"}) {
    const auto c = make_scenario(name).controller();
    std::vector<Vector> zeros(c.layout().levels, Vector::Zero(1));
    const AugmentedState s = c.initial_state(zeros);
    const Vector d = c.layout().flatten(c.closed_loop_rhs(s));
    EXPECT_EQ(d.cwiseAbs().maxCoeff(), 0.0) << name;
  }
}

TEST(ClosedLoop, Example1InitialDerivative) {
  const auto c = ex1();
  const AugmentedState d = c.closed_loop_rhs(ex1_state(c, 0.5, 0, 0, 0));
  EXPECT_DOUBLE_EQ(d.x[0](0), 0.5);
  EXPECT_DOUBLE_EQ(d.x[1](0), 0.0);
  EXPECT_NEAR(d.x2d(0), -2.5, 1e-12);
  EXPECT_NEAR(d.u(0), u_dot_hand(0.5, 0, 0, 0, {}, 1.0), 1e-6);
}

TEST(ClosedLoop, JetEngineInitialDerivative) {
  const Scenario sc = example2_jet_engine();
  const auto c = sc.controller();
  const AugmentedState d = c.closed_loop_rhs(sc.initial(c));
  EXPECT_DOUBLE_EQ(d.x[0](0), -74.0);
  EXPECT_TRUE(all_finite(c.layout().flatten(d)));
}

TEST(ClosedLoop, NonFiniteStateIsRejected) {
  const auto c = ex1();
  EXPECT_THROW((void)c.closed_loop_rhs(ex1_state(c, NAN, 0, 0, 0)), NonFiniteState);
}

TEST(ClosedLoop, DiagnosticsCollectDomainExcursions) {
  const auto c = ex1();
  Diagnostics diag;
  (void)c.closed_loop_rhs(ex1_state(c, 3.0, 0, 0, 0), &diag);
  ASSERT_FALSE(diag.warnings.empty());
  EXPECT_NE(diag.warnings.front().find("controlled domain"), std::string::npos);
}

TEST(GainConditions, ScalarLinearPlant) {
  auto f = [](Blocks b) { return Vector(b[0] + b[1]); };
  const CascadeModel model(1, {LevelDynamics::pure(f)}, DomainBox::uniform(1, 1, 1.0, 1.0));
  for (double kv1 : {1.0, 3.0}) {
    ControllerSpec spec;
    spec.K = {m1(1.0)};
    spec.Kv1 = m1(kv1);
    const DynamicBackstepping c(model, spec);
    const GainConditionReport r = c.check_gain_conditions(c.initial_state({v1(0.2)}));
    EXPECT_TRUE(r.applicable);
    EXPECT_NEAR(r.kv1_lhs(0, 0), kv1, 1e-9);
    EXPECT_NEAR(r.kv1_rhs(0, 0), 2.75, 1e-9);
    EXPECT_EQ(r.kv1_ok, kv1 > 2.75);
    EXPECT_NEAR(r.lipschitz, 1.0, 1e-9);
  }
}

TEST(GainConditions, Example1K2Bound) {
  ScenarioParams p;
  p.Kv1 = 3.0;
  p.K2 = 8.0;
  const Scenario sc = example1_stabilization(p);
  const auto c = sc.controller();
  const GainConditionReport r = c.check_gain_conditions(sc.initial(c));
  // L = max |df1/dx2| = 1 + 0.6 * 4 on the default box, M = A^2 / (J^2 Kv1) = 4/3
  EXPECT_NEAR(r.lipschitz, 3.4, 0.05);
  EXPECT_NEAR(r.coupling_m(0, 0), 4.0 / 3.0, 1e-9);
  EXPECT_NEAR(r.k2_bound, r.lipschitz * r.lipschitz / 4.0 * (1.0 + 4.0 / 3.0), 1e-12);
  EXPECT_TRUE(r.k2_ok);
  EXPECT_FALSE(strict_baseline_example().controller().check_gain_conditions(
                   strict_baseline_example().controller().initial_state({v1(1), v1(0)})).applicable);
}

TEST(Kappa1, CubicAndCustomAgree) {
  Scenario cubic = example1_stabilization();
  cubic.spec.kappa1 = Kappa1::cubic();
  Scenario custom = example1_stabilization();
  custom.spec.kappa1 = Kappa1::from([](const Vector& e) { return Vector(-e.array().cube()); });
  const auto a = cubic.controller();
  const auto b = custom.controller();
  const AugmentedState s = ex1_state(a, 0.6, -0.3, 0.2, 0.1);
  EXPECT_NEAR(a.eval_h1(s)(0), 0.6 + 0.2 + 0.008 / 5.0 + 0.216, 1e-15);
  EXPECT_NEAR(a.eval_h1(s)(0), b.eval_h1(s)(0), 1e-15);
  EXPECT_NEAR(a.eval_h2(s)(0), b.eval_h2(s)(0), 1e-7);
}

TEST(Construction, ValidatesGainsAndStructure) {
  Scenario sc = example1_stabilization();
  sc.spec.Kv1 = m1(-1.0);
  EXPECT_THROW(sc.controller(), ConfigError);
  sc = example1_stabilization();
  sc.spec.K.pop_back();
  EXPECT_THROW(sc.controller(), ConfigError);
  sc = example1_stabilization();
  sc.spec.K[1] = Matrix::Identity(2, 2);
  EXPECT_THROW(sc.controller(), DimensionError);
  sc = example1_stabilization();
  sc.spec.x2d0 = Vector::Zero(3);
  EXPECT_THROW(sc.controller(), DimensionError);
  Matrix asym(2, 2);
  asym << 1, 0.5, 0, 1;
  EXPECT_FALSE(is_symmetric_positive_definite(asym));

  auto f = [](Blocks b) { return b[0]; };
  auto g = [](Blocks) { return m1(1.0); };
  const CascadeModel three(1,
                           {LevelDynamics::strict(f, g), LevelDynamics::strict(f, g),
                            LevelDynamics::pure([](Blocks b) { return b[3]; })},
                           DomainBox::uniform(3, 1, 1.0, 1.0));
  ControllerSpec spec;
  spec.K = {m1(1), m1(1), m1(1)};
  spec.Kv2 = m1(1);
  EXPECT_THROW(DynamicBackstepping(three, spec), UnsupportedStructure);
}

TEST(Construction, MultiInputGainsUseMatrices) {
  // decoupled two-channel copy of the double integrator
  auto zero = [](Blocks) { return Vector::Zero(2); };
  auto eye = [](Blocks) { return Matrix::Identity(2, 2); };
  const CascadeModel model(2, {LevelDynamics::strict(zero, eye), LevelDynamics::strict(zero, eye)},
                           DomainBox::uniform(2, 2, 2.0, 10.0));
  ControllerSpec spec;
  Matrix k(2, 2);
  k << 2, 0.5, 0.5, 1;
  spec.K = {k, k};
  const DynamicBackstepping c(model, spec);
  const Vector x1 = Vector::LinSpaced(2, 0.3, -0.4);
  const AugmentedState s = c.initial_state({x1, Vector::Zero(2)});
  // x2d = -K x1, x2d' = -K x2 = 0, u = -K (x2 - x2d) - x1
  const Vector expected = -k * (k * x1) - x1;
  EXPECT_LT((c.control(s) - expected).cwiseAbs().maxCoeff(), 1e-9);
}
