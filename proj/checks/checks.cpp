#include "checks.hpp"

#include "oracles.hpp"

#include "dynastep/numeric.hpp"
#include "dynastep/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>

namespace dynastep::checks {

namespace {

double thread_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Run {
  Trajectory traj;
  double cpu_seconds = 0.0;
};

Run simulate_scenario(const Scenario& sc) {
  const DynamicBackstepping ctrl = sc.controller();
  const double start = thread_cpu_seconds();
  Run run{simulate(ctrl, sc.sim, sc.initial(ctrl)), 0.0};
  run.cpu_seconds = thread_cpu_seconds() - start;
  return run;
}

// Nominal runs are shared between checks; the first caller simulates.
const Run& nominal(const std::string& name) {
  using Shared = std::shared_future<std::shared_ptr<const Run>>;
  static std::mutex mu;
  static std::map<std::string, Shared> cache;
  std::promise<std::shared_ptr<const Run>> promise;
  Shared fut;
  bool owner = false;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(name);
    if (it == cache.end()) {
      fut = promise.get_future().share();
      cache.emplace(name, fut);
      owner = true;
    } else {
      fut = it->second;
    }
  }
  if (owner) {
    try {
      promise.set_value(std::make_shared<const Run>(simulate_scenario(make_scenario(name))));
    } catch (...) {
      promise.set_exception(std::current_exception());
    }
  }
  return *fut.get();
}

double plant_norm(const AugmentedState& s) {
  double n = 0.0;
  for (const Vector& x : s.x) n = std::max(n, inf_norm(x));
  return n;
}

// Largest plant-state norm at samples with t >= from.
double max_state_after(const Trajectory& tr, double from) {
  double worst = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (tr.times[i] >= from - 1e-9) worst = std::max(worst, plant_norm(tr.states[i]));
  }
  return worst;
}

double max_residual_after(const Trajectory& tr, double from) {
  double worst = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (tr.times[i] < from - 1e-9) continue;
    for (const Vector& h : tr.residuals[i]) worst = std::max(worst, inf_norm(h));
  }
  return worst;
}

std::string termination_note(const Trajectory& tr) {
  return tr.completed() ? "" : std::string(to_string(tr.termination)) + ": " + tr.message + "; ";
}

double interpolate(const std::vector<double>& t, const std::vector<double>& y, double at) {
  const auto it = std::lower_bound(t.begin(), t.end(), at);
  if (it == t.begin()) return y.front();
  if (it == t.end()) return y.back();
  const auto i = static_cast<std::size_t>(it - t.begin());
  const double w = (at - t[i - 1]) / (t[i] - t[i - 1]);
  return (1.0 - w) * y[i - 1] + w * y[i];
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

Vector v1(double x) { return Vector::Constant(1, x); }

// ---------------------------------------------------------------------------

CheckResult residual_oracles() {
  CheckResult r{"residual transcription oracles", false, {}, 0.0};
  const double start = thread_cpu_seconds();
  const oracle::Gains g{};
  const DynamicBackstepping c1 = example1_stabilization().controller();
  const DynamicBackstepping c2 = example2_jet_engine().controller();
  const DynamicBackstepping c3 = example3_tracking().controller();

  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double e1h1 = 0, e1h2 = 0, e2h1 = 0, e3h1 = 0, e3transcribed = 0, e3derived = 0;
  for (int i = 0; i < 1000; ++i) {
    const double x1 = U(rng), x2 = U(rng), x2d = U(rng), u = U(rng);
    AugmentedState s = c1.initial_state({v1(x1), v1(x2)});
    s.x2d = v1(x2d);
    s.u = v1(u);
    e1h1 = std::max(e1h1, std::abs(c1.eval_h1(s)(0) - oracle::ex1_h1(x1, x2d, g)));
    e1h2 = std::max(e1h2, std::abs(c1.eval_h2(s)(0) - oracle::ex1_h2(x1, x2, x2d, u, g)));

    const double rr = U(rng), rd = U(rng);
    AugmentedState t = c3.initial_state({v1(x1), v1(x2)});
    t.x2d = v1(x2d);
    t.u = v1(u);
    t.w << rr, rd;
    const double rdd = oracle::vdp_rddot(rr, rd);
    const double h2 = c3.eval_h2(t)(0);
    e3h1 = std::max(e3h1, std::abs(c3.eval_h1(t)(0) - oracle::ex3_h1(x1, x2d, rr, rd, g)));
    e3transcribed = std::max(
        e3transcribed, std::abs(h2 - oracle::ex3_h2_transcribed(x1, x2, x2d, u, rr, rd, rdd, g)));
    e3derived = std::max(
        e3derived, std::abs(h2 - oracle::ex3_h2_derived(x1, x2, x2d, u, rr, rd, rdd, g)));

    const double R = U(rng), phi = U(rng), psi = U(rng), phid = U(rng);
    AugmentedState q = c2.initial_state({v1(R), v1(phi), v1(psi)});
    q.x2d = v1(phid);
    e2h1 = std::max(e2h1, std::abs(c2.eval_h1(q)(0) - oracle::ex2_h1_scaled(R, phid, 1.0, 1.0)));
  }
  r.seconds = thread_cpu_seconds() - start;
  constexpr double tol = 1e-9;
  r.pass = std::max({e1h1, e1h2, e2h1, e3h1, e3transcribed}) <= tol && r.seconds < 1.0;
  r.detail = "max err: ex1 h1 " + num(e1h1) + ", ex1 h2 " + num(e1h2) + ", ex2 h1~ " +
             num(e2h1) + ", ex3 h1 " + num(e3h1) + ", ex3 h2 transcribed " + num(e3transcribed) +
             " (with reference feedforward completed " + num(e3derived) + "); cpu " +
             num(r.seconds) + " s";
  return r;
}

CheckResult example1_stabilization_check() {
  CheckResult r{"example1 stabilization", false, {}, 0.0};
  const Run& run = nominal("example1");
  const Trajectory& tr = run.traj;
  const double xs = max_state_after(tr, 15.0);
  const double hs = max_residual_after(tr, 10.0);
  r.seconds = run.cpu_seconds;
  r.pass = tr.completed() && xs < 1e-2 && hs < 1e-3 && run.cpu_seconds < 5.0;
  r.detail = termination_note(tr) + "|x|inf at t=15 " + num(xs) + ", max |h| for t>=10 " +
             num(hs) + ", cpu " + num(run.cpu_seconds) + " s";
  return r;
}

CheckResult lyapunov_decrease() {
  CheckResult r{"Lyapunov decrease on examples 1-3", true, {}, 0.0};
  for (const char* name : {"example1", "example2", "example3"}) {
    const Trajectory& tr = nominal(name).traj;
    const DecreaseReport rep = monitor_decrease(tr);
    const bool ok = tr.completed() && rep.violation_fraction <= 0.01;
    r.pass = r.pass && ok;
    r.detail += std::string(r.detail.empty() ? "" : "; ") + name + " " +
                num(100.0 * rep.violation_fraction) + "% of " + std::to_string(rep.checked);
  }
  return r;
}

CheckResult example2_check() {
  CheckResult r{"example2 jet engine", false, {}, 0.0};
  const Trajectory& tr = nominal("example2").traj;
  const double xs = max_state_after(tr, 20.0);
  const double hs = max_residual_after(tr, 15.0);
  r.pass = tr.completed() && xs < 1e-2 && hs < 1e-3;
  r.detail = termination_note(tr) + "|x|inf at t=20 " + num(xs) + ", max |h1~| for t>=15 " +
             num(hs) + ", termination " + to_string(tr.termination);
  return r;
}

CheckResult example3_check() {
  CheckResult r{"example3 tracking", false, {}, 0.0};
  const Trajectory& tr = nominal("example3").traj;
  std::vector<double> t, rv, uv;
  double err = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    t.push_back(tr.times[i]);
    rv.push_back(tr.references[i].r(0));
    uv.push_back(tr.controls[i](0));
    if (tr.times[i] >= 10.0) err = std::max(err, std::abs(tr.states[i].x[0](0) - rv.back()));
  }
  std::vector<double> crossings;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] >= 10.0 && rv[i - 1] < 0.0 && rv[i] >= 0.0) {
      crossings.push_back(t[i - 1] + (t[i] - t[i - 1]) * (-rv[i - 1]) / (rv[i] - rv[i - 1]));
    }
  }
  double period = 0.0;
  double corr = 0.0;
  if (crossings.size() >= 2) {
    period = (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
    std::vector<double> a, b;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] < 20.0 || t[i] > 30.0 || t[i] + period > t.back()) continue;
      a.push_back(uv[i]);
      b.push_back(interpolate(t, uv, t[i] + period));
    }
    if (a.size() > 2) corr = pearson(a, b);
  }
  r.pass = tr.completed() && err < 5e-3 && corr > 0.99;
  r.detail = termination_note(tr) + "max |x1 - r| on [10,40] " + num(err) + ", period " +
             num(period) + " s, u correlation " + num(corr);
  return r;
}

CheckResult singularity_check() {
  CheckResult r{"singularity handling", false, {}, 0.0};
  const Trajectory& scaled = nominal("singular-scalar").traj;
  ScenarioParams p;
  p.scaling = false;
  const Run unscaled = simulate_scenario(singular_scalar_example(p));
  const double x_end = plant_norm(scaled.states.back());
  r.pass = scaled.completed() && x_end < 1e-3 &&
           unscaled.traj.termination == Termination::SingularJacobian;
  r.detail = "scaled: " + std::string(to_string(scaled.termination)) + ", |x1(end)| " +
             num(x_end) + "; unscaled: " + to_string(unscaled.traj.termination);
  if (!unscaled.traj.times.empty()) {
    const AugmentedState& last = unscaled.traj.states.back();
    r.detail += " after t = " + num(last.t) + " (x1 " + num(last.x[0](0)) + ", u " +
                num(last.u(0)) + ")";
  }
  return r;
}

CheckResult gain_checker() {
  CheckResult r{"gain-condition checker", false, {}, 0.0};
  auto f = [](Blocks b) { return Vector(b[0] + b[1]); };
  std::vector<BlockMatrixField> jac{[](Blocks) { return Matrix::Identity(1, 1); },
                                    [](Blocks) { return Matrix::Identity(1, 1); }};
  const CascadeModel model(1, {LevelDynamics::pure(f, jac)}, DomainBox::uniform(1, 1, 1.0, 1.0));
  auto report = [&](double kv1) {
    ControllerSpec spec;
    spec.K = {Matrix::Identity(1, 1)};
    spec.Kv1 = Matrix::Constant(1, 1, kv1);
    const DynamicBackstepping ctrl(model, spec);
    AugmentedState s = ctrl.initial_state({v1(0.3)});
    s.u = v1(-0.2);
    return ctrl.check_gain_conditions(s);
  };
  const GainConditionReport weak = report(1.0);
  const GainConditionReport strong = report(3.0);
  const bool exact = weak.kv1_lhs(0, 0) == 1.0 && weak.kv1_rhs(0, 0) == 2.75 &&
                     strong.kv1_lhs(0, 0) == 3.0 && strong.kv1_rhs(0, 0) == 2.75;
  r.pass = exact && !weak.kv1_ok && strong.kv1_ok && std::abs(weak.lipschitz - 1.0) < 1e-12;
  r.detail = "Kv1=1: lhs " + num(weak.kv1_lhs(0, 0)) + " rhs " + num(weak.kv1_rhs(0, 0)) +
             (weak.kv1_ok ? " pass" : " fail") + "; Kv1=3: lhs " + num(strong.kv1_lhs(0, 0)) +
             (strong.kv1_ok ? " pass" : " fail") + "; L " + num(weak.lipschitz);
  return r;
}

CheckResult variant_robustness() {
  CheckResult r{"simplified variants on example1", false, {}, 0.0};
  ScenarioParams p;
  p.K1 = 1.0;
  p.Kv1 = 3.0;
  p.K2 = 8.0;
  p.kappa2_variant = Kappa2Variant::SimplifiedLipschitz;
  p.x2d_dot_variant = X2dDotVariant::Simplified;
  Scenario sc = example1_stabilization(p);
  sc.sim.t_final = 20.0;
  const DynamicBackstepping ctrl = sc.controller();
  const GainConditionReport gc = ctrl.check_gain_conditions(sc.initial(ctrl));
  const Run run = simulate_scenario(sc);
  const double xs = max_state_after(run.traj, 20.0);
  r.pass = gc.kv1_ok && gc.k2_ok && run.traj.completed() && xs < 1e-2;
  r.detail = termination_note(run.traj) + "gain conditions at IC: Kv1 margin " +
             num(gc.kv1_margin) + ", K2 bound " + num(gc.k2_bound) + " (L " +
             num(gc.lipschitz) + "); |x|inf at t=20 " + num(xs);
  return r;
}

CheckResult numerical_infrastructure() {
  CheckResult r{"integrator order and Jacobian oracle", false, {}, 0.0};
  std::vector<Vector> finals;
  for (double dt : {0.05, 0.025, 0.0125}) {
    Scenario sc = example1_stabilization();
    sc.sim.dt = dt;
    sc.sim.t_final = 5.0;
    const Run run = simulate_scenario(sc);
    if (!run.traj.completed()) {
      r.detail = "dt " + num(dt) + ": " + termination_note(run.traj);
      return r;
    }
    finals.push_back(run.traj.layout.flatten(run.traj.states.back()));
  }
  const double ratio = inf_norm(finals[0] - finals[1]) / inf_norm(finals[1] - finals[2]);

  double jac_err = 0.0;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (const auto& name : scenario_names()) {
    const CascadeModel model = make_scenario(name).model;
    const DomainBox& box = model.domain();
    const auto m = static_cast<Eigen::Index>(model.dim());
    for (int sample = 0; sample < 100; ++sample) {
      std::vector<Vector> blocks;
      for (std::size_t k = 0; k < model.num_levels(); ++k) {
        Vector b(m);
        for (Eigen::Index i = 0; i < m; ++i) {
          const Eigen::Index c = static_cast<Eigen::Index>(k) * m + i;
          b(i) = box.lower(c) + (box.upper(c) - box.lower(c)) * U(rng);
        }
        blocks.push_back(b);
      }
      Vector u(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        u(i) = box.control_lower(i) + (box.control_upper(i) - box.control_lower(i)) * U(rng);
      }
      for (std::size_t k = 0; k < model.num_levels(); ++k) {
        std::vector<Vector> args(blocks.begin(), blocks.begin() + static_cast<std::ptrdiff_t>(k + 1));
        args.push_back(k + 1 < model.num_levels() ? blocks[k + 1] : u);
        const BlockField level = [&model, k](Blocks b) { return model.eval_level(k, b); };
        for (std::size_t wrt = 0; wrt < args.size(); ++wrt) {
          const Matrix analytic = model.jacobian(k, Blocks(args), wrt);
          const Matrix fd = fd_jacobian_oracle(level, Blocks(args), wrt, 1e-4);
          jac_err = std::max(jac_err, (analytic - fd).cwiseAbs().maxCoeff());
        }
      }
    }
  }
  r.pass = ratio >= 8.0 && ratio <= 32.0 && jac_err <= 1e-5;
  r.detail = "RK4 halving ratio " + num(ratio) + ", max |analytic - FD Jacobian| " + num(jac_err);
  return r;
}

CheckResult strict_baseline_check() {
  CheckResult r{"strict baseline closed form", false, {}, 0.0};
  const Trajectory& tr = nominal("strict-baseline").traj;
  double err = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double t = tr.times[i];
    err = std::max({err, std::abs(tr.states[i].x[0](0) - oracle::baseline_x1(t)),
                    std::abs(tr.states[i].x[1](0) - oracle::baseline_x2(t))});
  }
  r.pass = tr.completed() && tr.times.back() >= 12.0 - 1e-9 && err < 1e-4;
  r.detail = termination_note(tr) + "max deviation on [0,12] " + num(err) + ", u(0) " +
             num(tr.controls.front()(0));
  return r;
}

CheckResult guarded(const std::string& name, const std::function<CheckResult()>& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {name, false, std::string("exception: ") + e.what(), 0.0};
  }
}

}  // namespace

const std::vector<Check>& acceptance_checks() {
  static const std::vector<Check> all{
      {"residual transcription oracles", {"example1", "example2", "example3"}, residual_oracles},
      {"example1 stabilization", {"example1"}, example1_stabilization_check},
      {"Lyapunov decrease on examples 1-3", {"example1", "example2", "example3"}, lyapunov_decrease},
      {"example2 jet engine", {"example2"}, example2_check},
      {"example3 tracking", {"example3"}, example3_check},
      {"singularity handling", {"singular-scalar"}, singularity_check},
      {"gain-condition checker", {"gains"}, gain_checker},
      {"simplified variants on example1", {"example1"}, variant_robustness},
      {"integrator order and Jacobian oracle", {"example1", "numerics"}, numerical_infrastructure},
      {"strict baseline closed form", {"strict-baseline"}, strict_baseline_check},
  };
  return all;
}

std::vector<const Check*> select(const std::string& filter) {
  std::vector<const Check*> out;
  for (const Check& c : acceptance_checks()) {
    bool hit = filter.empty() || c.name.find(filter) != std::string::npos;
    for (const auto& tag : c.tags) hit = hit || tag.find(filter) != std::string::npos;
    if (hit) out.push_back(&c);
  }
  return out;
}

std::vector<CheckResult> run_all(const std::vector<const Check*>& selected, bool parallel) {
  std::vector<CheckResult> results;
  if (!parallel) {
    for (const Check* c : selected) results.push_back(guarded(c->name, c->run));
    return results;
  }
  std::vector<std::future<CheckResult>> futures;
  for (const Check* c : selected) {
    futures.push_back(std::async(std::launch::async, [c] { return guarded(c->name, c->run); }));
  }
  for (auto& f : futures) results.push_back(f.get());
  return results;
}

std::string format_table(const std::vector<CheckResult>& results) {
  std::size_t width = 0;
  for (const auto& r : results) width = std::max(width, r.name.size());
  std::ostringstream os;
  std::size_t passed = 0;
  for (const auto& r : results) {
    passed += r.pass ? 1 : 0;
    os << (r.pass ? "PASS  " : "FAIL  ") << r.name << std::string(width - r.name.size() + 2, ' ')
       << r.detail << '\n';
  }
  os << passed << "/" << results.size() << " checks passed\n";
  return os.str();
}

}  // namespace dynastep::checks
