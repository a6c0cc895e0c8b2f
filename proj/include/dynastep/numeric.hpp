#pragma once

#include "dynastep/types.hpp"

#include <functional>
#include <string_view>

namespace dynastep {

/// Central-difference Jacobian of `fn` at `x`; component j moves by h * max(1, |x_j|).
Matrix fd_jacobian(const std::function<Vector(const Vector&)>& fn, const Vector& x, double h);

/// Central-difference derivative of `fn` along the path `s -> fn(base + s * direction)` at s = 0.
/// The step is scaled so the perturbation has infinity-norm `h * max(1, |base|_inf)`.
Vector fd_directional(const std::function<Vector(const Vector&)>& fn, const Vector& base,
                      const Vector& direction, double h);

/// Finite-difference Jacobian oracle over one argument block of a level map.
Matrix fd_jacobian_oracle(const BlockField& field, Blocks args, std::size_t wrt, double h_fd);

struct InversionLimits {
  double min_abs_det = 1e-12;
  double warn_condition = 1e8;
};

/// Inverts a square Jacobian, throwing SingularJacobian when |det| < limits.min_abs_det.
/// A condition number above limits.warn_condition is reported to `diag` when given.
Matrix checked_inverse(const Matrix& a, std::string_view which, const InversionLimits& limits,
                       Diagnostics* diag = nullptr);

[[nodiscard]] bool is_symmetric_positive_definite(const Matrix& a, double sym_tol = 1e-12);

/// Eigenvalues of the symmetric part of `a`, ascending.
Vector symmetric_eigenvalues(const Matrix& a);

[[nodiscard]] bool all_finite(const Vector& v);

[[nodiscard]] inline double inf_norm(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

}  // namespace dynastep
