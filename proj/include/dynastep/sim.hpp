#pragma once

#include "dynastep/controller.hpp"
#include "dynastep/lyapunov.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace dynastep {

enum class Integrator { RK4, RK45 };

struct SimConfig {
  Integrator integrator = Integrator::RK4;
  double dt = 1e-3;  ///< RK4 step; RK45 initial step
  double rtol = 1e-8;
  double atol = 1e-10;
  double dt_max = 0.05;
  double t_final = 15.0;
  std::size_t sample_every = 1;  ///< output every k-th base step (base step = dt)
  double abort_threshold = 1e6;  ///< infinity norm of the augmented state

  void validate() const;
};

enum class Termination {
  Completed,
  NonFinite,
  SingularJacobian,
  SingularMatrix,
  NormBound,
  StepUnderflow,
};

[[nodiscard]] const char* to_string(Termination t) noexcept;

struct Trajectory {
  StateLayout layout;
  std::vector<double> times;
  std::vector<AugmentedState> states;
  std::vector<Vector> controls;
  std::vector<std::vector<Vector>> virtual_controls;  ///< x2d, x3d, ...
  std::vector<std::vector<Vector>> residuals;         ///< h1 and/or h2
  std::vector<ReferenceSample> references;            ///< tracking mode only
  std::vector<LyapunovSample> lyapunov;
  std::vector<std::string> term_names;

  Termination termination = Termination::Completed;
  std::string message;
  std::vector<std::string> warnings;  ///< first few distinct diagnostics
  std::size_t warning_count = 0;

  [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
  [[nodiscard]] bool completed() const noexcept { return termination == Termination::Completed; }
};

using Rhs = std::function<Vector(double t, const Vector& y)>;

/// Classical fourth-order Runge-Kutta step.
[[nodiscard]] Vector rk4_step(const Rhs& f, double t, const Vector& y, double dt);

struct Rk45Result {
  Vector y;
  double dt_next = 0.0;
  bool accepted = false;
  double error = 0.0;  ///< normalized error estimate
};

/// One Dormand-Prince 5(4) trial step with mixed rtol/atol control.
/// Throws StepUnderflow when dt drops below 1e-12.
[[nodiscard]] Rk45Result rk45_step(const Rhs& f, double t, const Vector& y, double dt,
                                   double rtol, double atol, double dt_max);

/// Integrates `y' = f` from t0 to t1 with adaptive steps; `dt` is updated in place.
Vector rk45_integrate(const Rhs& f, double t0, double t1, Vector y, double& dt, double rtol,
                      double atol, double dt_max);

/// Integrates the closed loop from `initial` and records telemetry at every output sample.
/// Errors terminate the run early; the partial trajectory is returned.
[[nodiscard]] Trajectory simulate(const DynamicBackstepping& ctrl, const SimConfig& cfg,
                                  const AugmentedState& initial);

[[nodiscard]] DecreaseReport monitor_decrease(const Trajectory& traj, double tol = 1e-8,
                                              double ball = 1e-3);

/// Channel names in CSV column order.
[[nodiscard]] std::vector<std::string> csv_header(const Trajectory& traj);

/// Writes the trajectory as CSV, 17 significant digits.
void write_csv(const Trajectory& traj, std::ostream& os);

/// Values of a named channel (any CSV column) over the trajectory.
[[nodiscard]] std::vector<double> channel(const Trajectory& traj, const std::string& name);

}  // namespace dynastep
