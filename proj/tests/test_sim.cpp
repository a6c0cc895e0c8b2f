#include "dynastep/scenarios.hpp"
#include "dynastep/sim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace dynastep;

namespace {

const Trajectory& example1_run() {
  static const Trajectory traj = [] {
    const Scenario sc = example1_stabilization();
    const auto c = sc.controller();
    return simulate(c, sc.sim, sc.initial(c));
  }();
  return traj;
}

double max_abs_after(const Trajectory& traj, const std::string& name, double t0) {
  const auto values = channel(traj, name);
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (traj.times[i] >= t0) m = std::max(m, std::abs(values[i]));
  }
  return m;
}

}  // namespace

TEST(Rk4, ZeroFieldKeepsState) {
  const Rhs zero = [](double, const Vector& y) { return Vector::Zero(y.size()); };
  const Vector y = Vector::LinSpaced(3, -1, 2);
  EXPECT_EQ(rk4_step(zero, 0.0, y, 0.1), y);
}

TEST(Rk4, ExponentialGrowthOneStep) {
  const Rhs f = [](double, const Vector& y) { return y; };
  EXPECT_NEAR(rk4_step(f, 0.0, Vector::Ones(1), 0.1)(0), std::exp(0.1), 1e-7);
}

TEST(Rk4, ExponentialDecayOverInterval) {
  const Rhs f = [](double, const Vector& y) { return Vector(-y); };
  Vector y = Vector::Ones(1);
  for (int i = 0; i < 1000; ++i) y = rk4_step(f, i * 0.01, y, 0.01);
  EXPECT_NEAR(y(0) / std::exp(-10.0), 1.0, 1e-6);
}

TEST(Rk4, FourthOrderConvergence) {
  const Rhs f = [](double t, const Vector& y) { return Vector(Vector::Constant(1, std::cos(t)) - y); };
  auto solve = [&](int n) {
    Vector y = Vector::Zero(1);
    const double h = 2.0 / n;
    for (int i = 0; i < n; ++i) y = rk4_step(f, i * h, y, h);
    return y(0);
  };
  const double exact = 0.5 * (std::cos(2.0) + std::sin(2.0) - std::exp(-2.0));
  const double ratio = std::abs(solve(20) - exact) / std::abs(solve(40) - exact);
  EXPECT_NEAR(ratio, 16.0, 2.0);
}

TEST(Rk45, StepGrowsTowardCapOnSmoothProblem) {
  const Rhs f = [](double, const Vector& y) { return Vector(-y); };
  double dt = 1e-4;
  (void)rk45_integrate(f, 0.0, 5.0, Vector::Ones(1), dt, 1e-6, 1e-9, 0.05);
  EXPECT_DOUBLE_EQ(dt, 0.05);
}

TEST(Rk45, GlobalErrorFollowsTolerance) {
  const Rhs f = [](double t, const Vector& y) { return Vector(Vector::Constant(1, std::cos(t)) - y); };
  double dt = 1e-3;
  const Vector y = rk45_integrate(f, 0.0, 10.0, Vector::Zero(1), dt, 1e-8, 1e-10, 0.5);
  const double exact = 0.5 * (std::cos(10.0) + std::sin(10.0) - std::exp(-10.0));
  EXPECT_LT(std::abs(y(0) - exact), 1e-6);
}

TEST(Rk45, RejectsAndShrinksLargeSteps) {
  const Rhs f = [](double, const Vector& y) { return Vector(-50.0 * y); };
  const Rk45Result r = rk45_step(f, 0.0, Vector::Ones(1), 0.5, 1e-8, 1e-10, 1.0);
  EXPECT_FALSE(r.accepted);
  EXPECT_LT(r.dt_next, 0.5);
}

TEST(Rk45, UnderflowIsReported) {
  const Rhs blowup = [](double t, const Vector& y) { return Vector(y / std::pow(1.0 - t, 3)); };
  double dt = 1e-3;
  EXPECT_THROW((void)rk45_integrate(blowup, 0.0, 2.0, Vector::Ones(1), dt, 1e-10, 1e-12, 0.1),
               StepUnderflow);
}

TEST(Simulate, OriginStaysAtOrigin) {
  const Scenario sc = example1_stabilization();
  const auto c = sc.controller();
  SimConfig cfg = sc.sim;
  cfg.t_final = 1.0;
  const Trajectory traj =
      simulate(c, cfg, c.initial_state({Vector::Zero(1), Vector::Zero(1)}));
  ASSERT_TRUE(traj.completed());
  for (const auto& s : traj.states) EXPECT_EQ(c.layout().flatten(s).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Simulate, SeriesAreAlignedAndTimesIncrease) {
  const Trajectory& traj = example1_run();
  ASSERT_TRUE(traj.completed()) << traj.message;
  EXPECT_EQ(traj.size(), 15001u);
  EXPECT_EQ(traj.states.size(), traj.size());
  EXPECT_EQ(traj.controls.size(), traj.size());
  EXPECT_EQ(traj.residuals.size(), traj.size());
  EXPECT_EQ(traj.lyapunov.size(), traj.size());
  for (std::size_t i = 1; i < traj.size(); ++i) ASSERT_GT(traj.times[i], traj.times[i - 1]);
  EXPECT_NEAR(traj.times.back(), 15.0, 1e-9);
}

TEST(Simulate, AbortedRunKeepsAlignedPrefix) {
  ScenarioParams p;
  p.scaling = false;
  const Scenario sc = singular_scalar_example(p);
  const auto c = sc.controller();
  const Trajectory traj = simulate(c, sc.sim, sc.initial(c));
  EXPECT_FALSE(traj.completed());
  EXPECT_FALSE(traj.message.empty());
  EXPECT_EQ(traj.states.size(), traj.size());
  EXPECT_EQ(traj.lyapunov.size(), traj.size());
  EXPECT_LT(traj.times.back(), sc.sim.t_final);
}

TEST(Simulate, ResidualsAreStativized) {
  const Trajectory& traj = example1_run();
  EXPECT_LT(max_abs_after(traj, "h1", 10.0), 1e-4);
  EXPECT_LT(max_abs_after(traj, "h2", 10.0), 1e-4);
  // envelope over successive 2.5 s windows shrinks
  EXPECT_LT(max_abs_after(traj, "h2", 7.5), max_abs_after(traj, "h2", 5.0));
  EXPECT_LT(max_abs_after(traj, "h2", 10.0), max_abs_after(traj, "h2", 7.5));
}

TEST(Simulate, LyapunovDecreases) {
  const DecreaseReport r = monitor_decrease(example1_run());
  EXPECT_GT(r.checked, 0u);
  EXPECT_EQ(r.violations, 0u);
}

TEST(Simulate, IntegratorsAgree) {
  const Scenario sc = example1_stabilization();
  const auto c = sc.controller();
  SimConfig cfg = sc.sim;
  cfg.integrator = Integrator::RK45;
  cfg.rtol = 1e-9;
  cfg.atol = 1e-11;
  cfg.sample_every = 100;
  const Trajectory adaptive = simulate(c, cfg, sc.initial(c));
  ASSERT_TRUE(adaptive.completed()) << adaptive.message;
  const Vector a = c.layout().flatten(adaptive.states.back());
  const Vector b = c.layout().flatten(example1_run().states.back());
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Simulate, StiffGainsNeedTheAdaptiveIntegrator) {
  ScenarioParams p;
  p.Kv1 = 50;
  p.Kv2 = 50;
  const Scenario sc = example1_stabilization(p);
  const auto c = sc.controller();
  SimConfig coarse = sc.sim;
  coarse.dt = 1e-2;
  EXPECT_EQ(simulate(c, coarse, sc.initial(c)).termination, Termination::NormBound);
  SimConfig adaptive = coarse;
  adaptive.integrator = Integrator::RK45;
  adaptive.rtol = 1e-6;
  adaptive.atol = 1e-9;
  const Trajectory traj = simulate(c, adaptive, sc.initial(c));
  ASSERT_TRUE(traj.completed()) << traj.message;
  EXPECT_LT(c.layout().flatten(traj.states.back()).head(2).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Simulate, SimplifiedVariantsConverge) {
  for (auto variant : {Kappa2Variant::SimplifiedLipschitz, Kappa2Variant::SimplifiedFirstOrder}) {
    ScenarioParams p;
    p.kappa2_variant = variant;
    p.x2d_dot_variant = X2dDotVariant::Simplified;
    p.Kv1 = 3.0;
    p.K2 = 8.0;
    const Scenario sc = example1_stabilization(p);
    const auto c = sc.controller();
    SimConfig cfg = sc.sim;
    cfg.dt = 2e-3;
    cfg.t_final = 20.0;
    const Trajectory traj = simulate(c, cfg, sc.initial(c));
    ASSERT_TRUE(traj.completed()) << traj.message;
    EXPECT_LT(c.layout().flatten(traj.states.back()).head(2).cwiseAbs().maxCoeff(), 1e-3);
  }
}

TEST(SimConfig, RejectsBadValues) {
  SimConfig cfg;
  cfg.dt = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.sample_every = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.t_final = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Csv, HeaderForEachStructure) {
  EXPECT_EQ(csv_header(example1_run()),
            (std::vector<std::string>{"t", "x1", "x2", "x2d", "u", "h1", "h2", "V", "Vdot_fd",
                                      "V_term1", "V_term2", "V_term3", "V_term4"}));
  const Scenario sc = example3_tracking();
  const auto c = sc.controller();
  SimConfig cfg = sc.sim;
  cfg.t_final = 0.01;
  const auto header = csv_header(simulate(c, cfg, sc.initial(c)));
  EXPECT_NE(std::find(header.begin(), header.end(), "r"), header.end());
  EXPECT_NE(std::find(header.begin(), header.end(), "rdot"), header.end());
}

TEST(Csv, RoundTripsExactly) {
  const Trajectory& traj = example1_run();
  std::ostringstream os;
  write_csv(traj, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  std::size_t row = 0;
  const auto x2 = channel(traj, "x2");
  while (std::getline(is, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    const auto c = line.find(',', b + 1);
    ASSERT_EQ(std::stod(line.substr(b + 1, c - b - 1)), x2[row]);
    ++row;
  }
  EXPECT_EQ(row, traj.size());
}

TEST(Csv, OutputIsDeterministic) {
  const Scenario sc = strict_baseline_example();
  auto text = [&] {
    const auto c = sc.controller();
    std::ostringstream os;
    write_csv(simulate(c, sc.sim, sc.initial(c)), os);
    return os.str();
  };
  EXPECT_EQ(text(), text());
}

TEST(Csv, UnknownChannelThrows) {
  EXPECT_THROW((void)channel(example1_run(), "x9"), ConfigError);
}
