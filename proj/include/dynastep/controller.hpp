#pragma once

#include "dynastep/model.hpp"
#include "dynastep/numeric.hpp"
#include "dynastep/reference.hpp"
#include "dynastep/types.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace dynastep {

/// Expected first-level dynamics kappa_1, applied to the tracking error e = x_1 - r.
struct Kappa1 {
  enum class Kind { Linear, Cubic, Custom };

  Kind kind = Kind::Linear;
  std::function<Vector(const Vector& e)> custom;
  std::function<Matrix(const Vector& e)> custom_jacobian;  // optional; FD when absent

  static Kappa1 linear() { return {}; }
  static Kappa1 cubic() { return {Kind::Cubic, {}, {}}; }
  static Kappa1 from(std::function<Vector(const Vector&)> fn,
                     std::function<Matrix(const Vector&)> jac = {}) {
    return {Kind::Custom, std::move(fn), std::move(jac)};
  }
};

enum class Kappa2Variant {
  Full,                  ///< Gamma-based law, tracks f_1(x_1, x_2) - f_1(x_1, x_2d)
  SimplifiedLipschitz,   ///< -K2 (x2 - x2d) + x2d'
  SimplifiedFirstOrder,  ///< first-order correction of the Lipschitz form
};

enum class X2dDotVariant { Full, Simplified };

/// Leading factor of the first-order simplified law: (dh1/dx2d)^T (default),
/// or its inverse-transpose as suggested by the Young-inequality step.
enum class FirstOrderFactor { Transpose, InverseTranspose };

/// Scaling h~ = S(x_1) h of the first-level residual, for residuals whose
/// Jacobian w.r.t. the virtual control vanishes on part of the domain.
///
/// Only `scale` is required. Where S itself blows up (S = 1/x_1 at x_1 = 0),
/// supply closed forms so the scaled quantities stay finite:
///  - inverse:       S^{-1}(x_1)
///  - scaled_field:  S(x_1) f_1(x_1, next)
///  - scaled_kappa:  S(x_1) kappa_1(e), called as (x_1, e)
struct ResidualScaling {
  std::function<Matrix(const Vector& x1)> scale;
  std::function<Matrix(const Vector& x1)> inverse;
  std::function<Vector(const Vector& x1, const Vector& next)> scaled_field;
  std::function<Vector(const Vector& x1, const Vector& e)> scaled_kappa;
};

using GammaFn = std::function<Vector(const Vector& x1, const Vector& x2, const Vector& x2d)>;

struct ControllerSpec {
  /// K[j] is the gain of level j (K[0] = K1, K[1] = K2, ...). One per level.
  std::vector<Matrix> K;
  Matrix Kv1;  ///< stativization gain of the first-level virtual control
  Matrix Kv2;  ///< stativization gain of the control (pure terminal level)

  Kappa1 kappa1 = Kappa1::linear();
  std::optional<GammaFn> gamma;  ///< default: -K2 (df1/dx2)^T (f1(x1,x2) - f1(x1,x2d))
  Kappa2Variant kappa2_variant = Kappa2Variant::Full;
  X2dDotVariant x2d_dot_variant = X2dDotVariant::Full;
  FirstOrderFactor first_order_factor = FirstOrderFactor::Transpose;
  std::optional<ResidualScaling> residual_scaling;
  std::optional<ReferenceSignal> reference;  ///< tracking mode when set

  Vector x2d0;
  Vector u0;

  double fd_step = 1e-5;  ///< step for partials of the residuals
  InversionLimits limits;

  [[nodiscard]] bool tracking() const noexcept { return reference.has_value(); }
};

/// Plant states plus the stativized virtual control and control.
/// Empty vectors mark slots that are not states for the configured structure.
struct AugmentedState {
  double t = 0.0;
  std::vector<Vector> x;  ///< x_1..x_n
  Vector x2d;             ///< stativized first-level virtual control
  Vector u;               ///< stativized control
  Vector w;               ///< reference generator state
};

struct StateLayout {
  std::size_t levels = 0;
  std::size_t m = 0;
  bool has_x2d = false;
  bool has_u = false;
  std::size_t reference_dim = 0;

  [[nodiscard]] std::size_t size() const noexcept {
    return levels * m + (has_x2d ? m : 0) + (has_u ? m : 0) + reference_dim;
  }
  [[nodiscard]] Vector flatten(const AugmentedState& s) const;
  [[nodiscard]] AugmentedState unflatten(const Vector& v, double t) const;
};

/// Sufficient gain conditions of the simplified laws, evaluated at one state.
struct GainConditionReport {
  bool applicable = false;

  // Kv1 condition: J Kv1 J^T > 3/4 K1^-1 - 1/4 (A + A^T) + 3/4 A K1 A^T,
  // with J = dh1/dx2d and A = dh1/dx1.
  Matrix kv1_lhs;
  Matrix kv1_rhs;
  double kv1_margin = 0.0;  ///< min eigenvalue of lhs - rhs
  bool kv1_ok = false;

  // K2 condition: min eig(K2) > L^2/4 (max eig(K1^-1) + max eig(M)).
  double lipschitz = 0.0;
  Matrix coupling_m;  ///< A^T J^-T Kv1^-1 J^-1 A
  double k2_bound = 0.0;
  double k2_min_eig = 0.0;
  bool k2_ok = false;
};

/// Dynamic backstepping controller for a pure/strict-feedback cascade.
///
/// Supported structures: the first level may be pure-feedback (its virtual
/// control is stativized) or strict-affine; with two levels the second may be
/// either; every level past the second must be strict-affine.
class DynamicBackstepping {
 public:
  DynamicBackstepping(CascadeModel model, ControllerSpec spec);

  [[nodiscard]] const CascadeModel& model() const noexcept { return model_; }
  [[nodiscard]] const ControllerSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const StateLayout& layout() const noexcept { return layout_; }

  [[nodiscard]] bool first_level_dynamic() const noexcept { return first_dynamic_; }
  [[nodiscard]] bool control_dynamic() const noexcept { return layout_.has_u; }

  /// Initial augmented state for plant states `x0` (x2d0/u0 and the reference from the spec).
  [[nodiscard]] AugmentedState initial_state(std::vector<Vector> x0) const;

  [[nodiscard]] ReferenceSample reference_at(const AugmentedState& s) const;

  /// First-level residual h1 = f1(x1, v) - kappa1(e) - r' (scaled when configured).
  [[nodiscard]] Vector eval_h1(const AugmentedState& s) const;

  /// Residual of the first level at an arbitrary (x1, next) pair.
  [[nodiscard]] Vector scaled_residual(const Vector& x1, const Vector& next,
                                       const ReferenceSample& ref) const;

  /// Rate of the stativized first-level virtual control (u' when n = 1).
  [[nodiscard]] Vector x2d_dot(const AugmentedState& s) const;

  /// Expected dynamics of the second level.
  [[nodiscard]] Vector kappa2(const AugmentedState& s) const;

  /// Second-level residual h2 = f2(x1, x2, u) - kappa2; pure terminal second level only.
  [[nodiscard]] Vector eval_h2(const AugmentedState& s) const;

  /// Rate of the stativized control.
  [[nodiscard]] Vector u_dot(const AugmentedState& s) const;

  /// Explicit control of a strict-affine terminal level.
  [[nodiscard]] Vector strict_level_control(const AugmentedState& s) const;

  /// Applied control u (state or explicit).
  [[nodiscard]] Vector control(const AugmentedState& s) const;

  /// Desired values x_{2d}, ..., x_{nd} (stativized or explicit).
  [[nodiscard]] std::vector<Vector> virtual_controls(const AugmentedState& s) const;

  /// Residuals that are driven to zero by stativization (h1 and/or h2).
  [[nodiscard]] std::vector<Vector> residuals(const AugmentedState& s) const;

  /// Error coordinates z with V = 1/2 sum |z_k|^2, in Lyapunov-term order.
  [[nodiscard]] std::vector<Vector> lyapunov_coordinates(const AugmentedState& s) const;

  /// Time derivative of the augmented state. `t` of the result is unused.
  AugmentedState closed_loop_rhs(const AugmentedState& s, Diagnostics* diag = nullptr) const;

  [[nodiscard]] GainConditionReport check_gain_conditions(const AugmentedState& s,
                                                          std::size_t samples = 10000) const;

 private:
  [[nodiscard]] Vector kappa1(const Vector& e) const;
  [[nodiscard]] Matrix kappa1_jacobian(const Vector& e) const;
  [[nodiscard]] Vector first_field(const Vector& x1, const Vector& next) const;
  [[nodiscard]] Vector first_field_scaled(const Vector& x1, const Vector& next) const;
  [[nodiscard]] Matrix first_field_scaled_jacobian(const Vector& x1, const Vector& next,
                                                   std::size_t wrt) const;
  [[nodiscard]] Matrix scale_inverse(const Vector& x1) const;
  [[nodiscard]] Matrix h1_jacobian_x1(const Vector& x1, const Vector& next,
                                      const ReferenceSample& ref) const;
  [[nodiscard]] Vector h1_time_rate(const Vector& x1, const ReferenceSample& ref) const;

  [[nodiscard]] const Vector& first_dynamic_state(const AugmentedState& s) const;
  [[nodiscard]] Vector plant_rate(const AugmentedState& s, std::size_t k) const;
  [[nodiscard]] Vector target(const AugmentedState& s, std::size_t j) const;
  [[nodiscard]] Vector desired(const AugmentedState& s, std::size_t j) const;
  [[nodiscard]] Vector desired_rate(const AugmentedState& s, std::size_t j) const;
  [[nodiscard]] Vector explicit_desired(const AugmentedState& s, std::size_t j) const;
  [[nodiscard]] Vector epsilon(const AugmentedState& s, std::size_t j) const;
  [[nodiscard]] Matrix epsilon_jacobian(const AugmentedState& s, std::size_t j) const;
  [[nodiscard]] Vector rate_along_flow(const AugmentedState& s, std::size_t upto_level,
                                       const std::function<Vector(const AugmentedState&)>& fn) const;
  void report_conditioning(const AugmentedState& s, Diagnostics& diag) const;

  CascadeModel model_;
  ControllerSpec spec_;
  StateLayout layout_;
  bool first_dynamic_ = false;
};

}  // namespace dynastep
