#include "dynastep/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace dynastep {

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(t_final > 0.0)) throw ConfigError("t_final must be positive");
  if (!(rtol > 0.0) || !(atol > 0.0)) throw ConfigError("rtol and atol must be positive");
  if (!(dt_max > 0.0)) throw ConfigError("dt_max must be positive");
  if (sample_every == 0) throw ConfigError("sample_every must be at least 1");
  if (!(abort_threshold > 0.0)) throw ConfigError("abort_threshold must be positive");
}

const char* to_string(Termination t) noexcept {
  switch (t) {
    case Termination::Completed: return "Completed";
    case Termination::NonFinite: return "NonFinite";
    case Termination::SingularJacobian: return "SingularJacobian";
    case Termination::SingularMatrix: return "SingularMatrix";
    case Termination::NormBound: return "NormBound";
    case Termination::StepUnderflow: return "StepUnderflow";
  }
  return "?";
}

Vector rk4_step(const Rhs& f, double t, const Vector& y, double dt) {
  const Vector k1 = f(t, y);
  const Vector k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1);
  const Vector k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2);
  const Vector k4 = f(t + dt, y + dt * k3);
  return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Rk45Result rk45_step(const Rhs& f, double t, const Vector& y, double dt, double rtol,
                     double atol, double dt_max) {
  if (dt < 1e-12) throw StepUnderflow("adaptive step fell below 1e-12 at t = " + std::to_string(t));
  // Dormand-Prince tableau
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  // Failures at y itself are real; failures at trial stages only reject the step.
  const Vector k1 = f(t, y);
  Vector y5, err;
  try {
    const Vector k2 = f(t + c2 * dt, y + dt * a21 * k1);
    const Vector k3 = f(t + c3 * dt, y + dt * (a31 * k1 + a32 * k2));
    const Vector k4 = f(t + c4 * dt, y + dt * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vector k5 = f(t + c5 * dt, y + dt * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vector k6 =
        f(t + dt, y + dt * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    y5 = y + dt * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vector k7 = f(t + dt, y5);
    err = dt * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  } catch (const Error&) {
    Rk45Result r;
    r.error = INFINITY;
    r.dt_next = 0.2 * dt;
    return r;
  }

  const Vector scale = (atol + rtol * y.cwiseAbs().cwiseMax(y5.cwiseAbs()).array()).matrix();
  const double norm = y.size() == 0 ? 0.0 : std::sqrt((err.cwiseQuotient(scale)).squaredNorm() /
                                                      static_cast<double>(y.size()));
  Rk45Result r;
  r.error = norm;
  r.accepted = std::isfinite(norm) && norm <= 1.0;
  double factor = 0.2;
  if (std::isfinite(norm)) {
    factor = norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
  }
  r.dt_next = std::min(dt * factor, dt_max);
  if (r.accepted) r.y = std::move(y5);
  return r;
}

Vector rk45_integrate(const Rhs& f, double t0, double t1, Vector y, double& dt, double rtol,
                      double atol, double dt_max) {
  double t = t0;
  const double span_tol = 1e-14 * std::max(1.0, std::abs(t1));
  while (t1 - t > span_tol) {
    const double h = std::min(dt, t1 - t);
    const bool truncated = h < dt;
    Rk45Result r = rk45_step(f, t, y, h, rtol, atol, dt_max);
    if (r.accepted) {
      t += h;
      y = std::move(r.y);
      if (!truncated) dt = r.dt_next;
    } else {
      dt = r.dt_next;
    }
  }
  return y;
}

namespace {

constexpr std::size_t kMaxStoredWarnings = 20;

void record(const DynamicBackstepping& ctrl, const AugmentedState& s, Trajectory& traj) {
  Diagnostics diag;
  (void)ctrl.closed_loop_rhs(s, &diag);
  for (auto& w : diag.warnings) {
    ++traj.warning_count;
    // keep the first occurrence of each kind; the text after '=' carries the value
    const std::string kind = w.substr(0, w.find('='));
    const bool seen = std::any_of(traj.warnings.begin(), traj.warnings.end(),
                                  [&](const std::string& k) { return k.find(kind) != std::string::npos; });
    if (!seen && traj.warnings.size() < kMaxStoredWarnings) {
      traj.warnings.push_back("t=" + std::to_string(s.t) + ": " + w);
    }
  }
  // Compute everything before appending so series stay equal length on failure.
  Vector u = ctrl.control(s);
  std::vector<Vector> vc = ctrl.virtual_controls(s);
  std::vector<Vector> res = ctrl.residuals(s);
  LyapunovSample lyap = eval_V(ctrl, s);
  if (ctrl.spec().tracking()) traj.references.push_back(ctrl.reference_at(s));
  traj.times.push_back(s.t);
  traj.states.push_back(s);
  traj.controls.push_back(std::move(u));
  traj.virtual_controls.push_back(std::move(vc));
  traj.residuals.push_back(std::move(res));
  traj.lyapunov.push_back(std::move(lyap));
}

}  // namespace

Trajectory simulate(const DynamicBackstepping& ctrl, const SimConfig& cfg,
                    const AugmentedState& initial) {
  cfg.validate();
  const StateLayout& lay = ctrl.layout();
  Trajectory traj;
  traj.layout = lay;
  traj.term_names = lyapunov_term_names(ctrl);

  const Rhs rhs = [&](double t, const Vector& y) {
    return lay.flatten(ctrl.closed_loop_rhs(lay.unflatten(y, t)));
  };

  Vector y = lay.flatten(initial);
  double t = initial.t;
  const auto steps = static_cast<std::size_t>(std::llround(cfg.t_final / cfg.dt));
  double dt_adaptive = cfg.dt;

  auto abort_with = [&](Termination cause, const std::string& msg) {
    traj.termination = cause;
    traj.message = msg;
  };

  try {
    if (!all_finite(y)) throw NonFiniteState("initial state is not finite");
    record(ctrl, lay.unflatten(y, t), traj);
    for (std::size_t k = 1; k <= steps; ++k) {
      const double t_next = initial.t + static_cast<double>(k) * cfg.dt;
      const bool sample = k % cfg.sample_every == 0 || k == steps;
      if (cfg.integrator == Integrator::RK4) {
        y = rk4_step(rhs, t, y, cfg.dt);
      } else if (sample) {
        // adaptive integration runs between output samples only
        const double t_from = traj.times.back();
        y = rk45_integrate(rhs, t_from, t_next, y, dt_adaptive, cfg.rtol, cfg.atol, cfg.dt_max);
      }
      t = t_next;
      if (cfg.integrator == Integrator::RK45 && !sample) continue;
      if (!all_finite(y)) throw NonFiniteState("state is not finite at t = " + std::to_string(t));
      if (inf_norm(y) > cfg.abort_threshold) {
        abort_with(Termination::NormBound,
                   "state norm exceeded " + std::to_string(cfg.abort_threshold) +
                       " at t = " + std::to_string(t));
        break;
      }
      if (sample) record(ctrl, lay.unflatten(y, t), traj);
    }
  } catch (const SingularJacobian& e) {
    abort_with(Termination::SingularJacobian, e.what());
  } catch (const SingularMatrix& e) {
    abort_with(Termination::SingularMatrix, e.what());
  } catch (const NonFiniteState& e) {
    abort_with(Termination::NonFinite, e.what());
  } catch (const StepUnderflow& e) {
    abort_with(Termination::StepUnderflow, e.what());
  }
  if (traj.termination != Termination::Completed && !traj.times.empty()) {
    traj.message += " (last sample t = " + std::to_string(traj.times.back()) + ")";
  }

  std::vector<double> v(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) v[i] = traj.lyapunov[i].V;
  const std::vector<double> rate = central_rate(traj.times, v);
  for (std::size_t i = 0; i < traj.size(); ++i) traj.lyapunov[i].Vdot_fd = rate[i];
  return traj;
}

DecreaseReport monitor_decrease(const Trajectory& traj, double tol, double ball) {
  std::vector<double> v(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) v[i] = traj.lyapunov[i].V;
  return monitor_decrease(traj.times, v, tol, ball);
}

namespace {

void push_block(std::vector<std::string>& names, const std::string& base, std::size_t m) {
  if (m == 1) {
    names.push_back(base);
    return;
  }
  for (std::size_t i = 0; i < m; ++i) names.push_back(base + "_" + std::to_string(i + 1));
}

void push_values(std::vector<double>& row, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(v(i));
}

std::vector<std::string> residual_names(const Trajectory& traj) {
  std::vector<std::string> names;
  for (const auto& n : traj.term_names) {
    if (n == "h1" || n == "h2") names.push_back(n);
  }
  return names;
}

std::vector<double> csv_row(const Trajectory& traj, std::size_t i) {
  std::vector<double> row{traj.times[i]};
  const AugmentedState& s = traj.states[i];
  for (const Vector& x : s.x) push_values(row, x);
  for (const Vector& v : traj.virtual_controls[i]) push_values(row, v);
  push_values(row, traj.controls[i]);
  if (!traj.references.empty()) {
    push_values(row, traj.references[i].r);
    push_values(row, traj.references[i].rdot);
  }
  for (const Vector& h : traj.residuals[i]) push_values(row, h);
  const LyapunovSample& l = traj.lyapunov[i];
  row.push_back(l.V);
  row.push_back(l.Vdot_fd);
  for (double term : l.terms) row.push_back(term);
  return row;
}

}  // namespace

std::vector<std::string> csv_header(const Trajectory& traj) {
  const std::size_t m = traj.layout.m;
  const std::size_t n = traj.layout.levels;
  std::vector<std::string> names{"t"};
  for (std::size_t k = 0; k < n; ++k) push_block(names, "x" + std::to_string(k + 1), m);
  for (std::size_t j = 1; j < n; ++j) push_block(names, "x" + std::to_string(j + 1) + "d", m);
  push_block(names, "u", m);
  if (!traj.references.empty()) {
    push_block(names, "r", m);
    push_block(names, "rdot", m);
  }
  for (const auto& h : residual_names(traj)) push_block(names, h, m);
  names.emplace_back("V");
  names.emplace_back("Vdot_fd");
  for (std::size_t k = 0; k < traj.term_names.size(); ++k) {
    names.push_back("V_term" + std::to_string(k + 1));
  }
  return names;
}

void write_csv(const Trajectory& traj, std::ostream& os) {
  const std::vector<std::string> header = csv_header(traj);
  for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
  os << '\n';
  char buf[32];
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const std::vector<double> row = csv_row(traj, i);
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", row[c]);
      if (c) os << ',';
      os << buf;
    }
    os << '\n';
  }
}

std::vector<double> channel(const Trajectory& traj, const std::string& name) {
  const std::vector<std::string> header = csv_header(traj);
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ConfigError("unknown channel '" + name + "'");
  const auto col = static_cast<std::size_t>(it - header.begin());
  std::vector<double> out(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) out[i] = csv_row(traj, i)[col];
  return out;
}

}  // namespace dynastep
