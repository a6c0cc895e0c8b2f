#include "dynastep/lyapunov.hpp"

#include <cmath>

namespace dynastep {

LyapunovSample eval_V(const DynamicBackstepping& ctrl, const AugmentedState& s) {
  LyapunovSample out;
  out.t = s.t;
  for (const Vector& z : ctrl.lyapunov_coordinates(s)) {
    const double term = 0.5 * z.squaredNorm();
    out.terms.push_back(term);
    out.V += term;
  }
  return out;
}

std::vector<std::string> lyapunov_term_names(const DynamicBackstepping& ctrl) {
  const StateLayout& lay = ctrl.layout();
  std::vector<std::string> names{"e1"};
  if (ctrl.first_level_dynamic()) names.emplace_back("h1");
  for (std::size_t j = 1; j < lay.levels; ++j) names.push_back("eps" + std::to_string(j + 1));
  if (lay.levels == 2 && lay.has_u) names.emplace_back("h2");
  return names;
}

std::vector<double> central_rate(std::span<const double> times, std::span<const double> values) {
  std::vector<double> rate(values.size(), 0.0);
  for (std::size_t i = 1; i + 1 < values.size(); ++i) {
    rate[i] = (values[i + 1] - values[i - 1]) / (times[i + 1] - times[i - 1]);
  }
  return rate;
}

DecreaseReport monitor_decrease(std::span<const double> times, std::span<const double> V,
                                double tol, double ball) {
  if (times.size() != V.size()) throw DimensionError("monitor_decrease: length mismatch");
  if (V.size() < 3) throw TrajectoryTooShort("monitor_decrease needs at least 3 samples");
  const std::vector<double> rate = central_rate(times, V);
  DecreaseReport rep;
  for (std::size_t i = 1; i + 1 < V.size(); ++i) {
    if (std::sqrt(2.0 * V[i]) < ball) continue;
    ++rep.checked;
    if (rate[i] >= tol) {
      ++rep.violations;
      if (!rep.first_violation) rep.first_violation = times[i];
    }
    rep.max_excursion = std::max(rep.max_excursion, rate[i]);
  }
  rep.violation_fraction =
      rep.checked == 0 ? 0.0 : static_cast<double>(rep.violations) / static_cast<double>(rep.checked);
  return rep;
}

}  // namespace dynastep
