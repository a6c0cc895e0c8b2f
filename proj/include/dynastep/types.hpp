#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynastep {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Ordered argument blocks of a level map: (x_1, ..., x_i, next).
using Blocks = std::span<const Vector>;

using BlockField = std::function<Vector(Blocks)>;
using BlockMatrixField = std::function<Matrix(Blocks)>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Model structure the controller constructor cannot handle.
class UnsupportedStructure : public Error {
 public:
  using Error::Error;
};

/// A Jacobian that must be inverted is (numerically) singular at the current state.
class SingularJacobian : public Error {
 public:
  SingularJacobian(std::string which, double det)
      : Error("singular Jacobian " + which + " (|det| = " + std::to_string(det) + ")"),
        which_(std::move(which)),
        det_(det) {}

  [[nodiscard]] const std::string& which() const noexcept { return which_; }
  [[nodiscard]] double determinant() const noexcept { return det_; }

 private:
  std::string which_;
  double det_;
};

/// An input-gain matrix g(x) of a strict-feedback level is not invertible.
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

class NonFiniteState : public Error {
 public:
  using Error::Error;
};

class TrajectoryTooShort : public Error {
 public:
  using Error::Error;
};

class StepUnderflow : public Error {
 public:
  using Error::Error;
};

/// Caller-owned sink for non-fatal conditions (domain excursions, poor conditioning).
struct Diagnostics {
  std::vector<std::string> warnings;

  void warn(std::string message) { warnings.push_back(std::move(message)); }
};

}  // namespace dynastep
