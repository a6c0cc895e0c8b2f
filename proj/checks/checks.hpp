#pragma once

#include <functional>
#include <string>
#include <vector>

namespace dynastep::checks {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;  ///< CPU time of the checking thread
};

struct Check {
  std::string name;
  std::vector<std::string> tags;  ///< scenario names the check touches
  std::function<CheckResult()> run;
};

/// One check per acceptance criterion, in a fixed order.
[[nodiscard]] const std::vector<Check>& acceptance_checks();

/// Checks whose name or tags contain `filter` (all when empty).
[[nodiscard]] std::vector<const Check*> select(const std::string& filter);

/// Runs the checks concurrently; results keep the input order.
[[nodiscard]] std::vector<CheckResult> run_all(const std::vector<const Check*>& selected,
                                               bool parallel = true);

/// "PASS  name  detail" lines followed by a totals line.
[[nodiscard]] std::string format_table(const std::vector<CheckResult>& results);

}  // namespace dynastep::checks
