#pragma once

#include "dynastep/types.hpp"

#include <functional>

namespace dynastep {

struct ReferenceSample {
  Vector r;
  Vector rdot;
  Vector rddot;
};

/// Reference r(t) for the output y = x_1, with its first two derivatives.
///
/// A signal may carry an internal generator state w that is integrated with the
/// closed loop (w' = derivative(t, w)); closed-form signals use an empty state.
class ReferenceSignal {
 public:
  using Derivative = std::function<Vector(double t, const Vector& w)>;
  using Sampler = std::function<ReferenceSample(double t, const Vector& w)>;

  ReferenceSignal(std::size_t dim, Vector initial_state, Derivative derivative, Sampler sampler);

  /// Closed-form signal from three time functions.
  static ReferenceSignal from_functions(std::size_t dim, std::function<Vector(double)> r,
                                        std::function<Vector(double)> rdot,
                                        std::function<Vector(double)> rddot);

  /// Scalar van der Pol generator r'' = -r + mu (1 - r^2) r', co-integrated as (r, r').
  static ReferenceSignal van_der_pol(double mu, double r0, double rdot0);

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t state_dim() const noexcept {
    return static_cast<std::size_t>(initial_.size());
  }
  [[nodiscard]] const Vector& initial_state() const noexcept { return initial_; }

  [[nodiscard]] Vector derivative(double t, const Vector& w) const { return derivative_(t, w); }
  [[nodiscard]] ReferenceSample sample(double t, const Vector& w) const;

 private:
  std::size_t dim_;
  Vector initial_;
  Derivative derivative_;
  Sampler sampler_;
};

}  // namespace dynastep
