#pragma once

#include "dynastep/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dynastep {

enum class LevelKind {
  PureFeedback,  ///< x_i' = f(x_1..x_i, next), next enters non-affinely
  StrictAffine,  ///< x_i' = f(x_1..x_i) + g(x_1..x_i) * next
};

/// Dynamics of one level of the cascade.
///
/// Level k (0-based) is evaluated on k + 2 argument blocks: the plant states
/// x_1..x_{k+1} followed by the next state, or the control u for the last level.
/// For strict-affine levels `field` and `gain` take only the k + 1 state blocks.
struct LevelDynamics {
  LevelKind kind = LevelKind::PureFeedback;
  BlockField field;
  BlockMatrixField gain;  // strict-affine only

  /// Optional analytic Jacobians of the full level map, each called on all k + 2
  /// argument blocks. Pure levels: one per block (k + 2 entries). Strict levels:
  /// one per state block (k + 1 entries); w.r.t. `next` the Jacobian is the gain.
  std::vector<BlockMatrixField> jacobians;

  static LevelDynamics pure(BlockField f, std::vector<BlockMatrixField> jac = {});
  static LevelDynamics strict(BlockField f, BlockMatrixField g,
                              std::vector<BlockMatrixField> jac = {});
};

/// Componentwise box over the stacked plant state (x_1; ...; x_n) plus a box for u.
struct DomainBox {
  Vector lower;
  Vector upper;
  Vector control_lower;
  Vector control_upper;

  static DomainBox uniform(std::size_t levels, std::size_t m, double state_bound,
                           double control_bound);

  [[nodiscard]] bool contains_states(const Vector& stacked) const;
  [[nodiscard]] bool contains_control(const Vector& u) const;
};

/// Immutable pure/strict-feedback cascade plant with equal per-level dimension m.
class CascadeModel {
 public:
  CascadeModel(std::size_t m, std::vector<LevelDynamics> levels, DomainBox domain,
               double fd_step = 1e-4);

  [[nodiscard]] std::size_t dim() const noexcept { return m_; }
  [[nodiscard]] std::size_t num_levels() const noexcept { return levels_.size(); }
  [[nodiscard]] const LevelDynamics& level(std::size_t k) const { return levels_.at(k); }
  [[nodiscard]] const DomainBox& domain() const noexcept { return domain_; }
  [[nodiscard]] double fd_step() const noexcept { return fd_step_; }

  /// x_{k+1}' for level k given (x_1..x_{k+1}, next).
  [[nodiscard]] Vector eval_level(std::size_t k, Blocks args) const;

  /// Drift part f of a strict-affine level, evaluated on the state blocks only.
  [[nodiscard]] Vector drift(std::size_t k, Blocks states) const;

  /// Input gain g of a strict-affine level, evaluated on the state blocks only.
  [[nodiscard]] Matrix input_gain(std::size_t k, Blocks states) const;

  /// d(level map)/d(args[wrt]); analytic when registered, else central differences.
  [[nodiscard]] Matrix jacobian(std::size_t k, Blocks args, std::size_t wrt) const;

  /// Human-readable description of a domain excursion, if any. `states` holds x_1..x_n.
  [[nodiscard]] std::optional<std::string> domain_violation(Blocks states) const;

 private:
  void check_args(std::size_t k, Blocks args, std::size_t expected) const;

  std::size_t m_;
  std::vector<LevelDynamics> levels_;
  DomainBox domain_;
  double fd_step_;
};

}  // namespace dynastep
