#pragma once

#include "dynastep/controller.hpp"

#include <optional>
#include <span>
#include <vector>

namespace dynastep {

/// Composite CLF V = 1/2 sum |z_k|^2 over the controller's error coordinates.
struct LyapunovSample {
  double t = 0.0;
  double V = 0.0;
  std::vector<double> terms;  ///< one summand per coordinate, in lyapunov_coordinates order
  double Vdot_fd = 0.0;       ///< filled from the sampled trajectory; 0 at the end points
};

[[nodiscard]] LyapunovSample eval_V(const DynamicBackstepping& ctrl, const AugmentedState& s);

/// Names of the V terms, e.g. {"e1", "h1", "eps2", "h2"}.
[[nodiscard]] std::vector<std::string> lyapunov_term_names(const DynamicBackstepping& ctrl);

struct DecreaseReport {
  std::size_t checked = 0;     ///< interior samples outside the terminal ball
  std::size_t violations = 0;  ///< of those, samples with Vdot_fd >= tol
  double violation_fraction = 0.0;
  std::optional<double> first_violation;
  double max_excursion = 0.0;  ///< largest positive Vdot_fd among checked samples
};

/// Central-difference rate of a sampled series; end points are left at 0.
[[nodiscard]] std::vector<double> central_rate(std::span<const double> times,
                                               std::span<const double> values);

/// Checks Vdot_fd < tol at interior samples whose sqrt(2 V) is at least `ball`.
/// Throws TrajectoryTooShort below three samples.
[[nodiscard]] DecreaseReport monitor_decrease(std::span<const double> times,
                                              std::span<const double> V, double tol = 1e-8,
                                              double ball = 1e-3);

}  // namespace dynastep
