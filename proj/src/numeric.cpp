#include "dynastep/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dynastep {

Matrix fd_jacobian(const std::function<Vector(const Vector&)>& fn, const Vector& x, double h) {
  const Eigen::Index n = x.size();
  Vector probe = x;
  Matrix jac;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double step = h * std::max(1.0, std::abs(x(j)));
    probe(j) = x(j) + step;
    const Vector plus = fn(probe);
    probe(j) = x(j) - step;
    const Vector minus = fn(probe);
    probe(j) = x(j);
    if (j == 0) jac.resize(plus.size(), n);
    jac.col(j) = (plus - minus) / (2.0 * step);
  }
  return jac;
}

Vector fd_directional(const std::function<Vector(const Vector&)>& fn, const Vector& base,
                      const Vector& direction, double h) {
  const double dir_norm = inf_norm(direction);
  if (dir_norm == 0.0) {
    return Vector::Zero(fn(base).size());
  }
  const double eps = h * std::max(1.0, inf_norm(base)) / dir_norm;
  const Vector plus = fn(base + eps * direction);
  const Vector minus = fn(base - eps * direction);
  return (plus - minus) / (2.0 * eps);
}

Matrix fd_jacobian_oracle(const BlockField& field, Blocks args, std::size_t wrt, double h_fd) {
  if (wrt >= args.size()) {
    throw DimensionError("fd_jacobian_oracle: block index out of range");
  }
  std::vector<Vector> work(args.begin(), args.end());
  auto along_block = [&](const Vector& v) {
    work[wrt] = v;
    return field(Blocks(work));
  };
  Matrix jac = fd_jacobian(along_block, args[wrt], h_fd);
  return jac;
}

Matrix checked_inverse(const Matrix& a, std::string_view which, const InversionLimits& limits,
                       Diagnostics* diag) {
  if (a.rows() != a.cols()) {
    throw DimensionError(std::string(which) + " is not square");
  }
  const double det = a.determinant();
  if (!std::isfinite(det) || std::abs(det) < limits.min_abs_det) {
    throw SingularJacobian(std::string(which), det);
  }
  if (diag != nullptr && a.rows() > 1) {
    Eigen::JacobiSVD<Matrix> svd(a);
    const auto& sv = svd.singularValues();
    const double cond = sv(0) / sv(sv.size() - 1);
    if (cond > limits.warn_condition) {
      std::ostringstream msg;
      msg << which << " poorly conditioned (cond = " << cond << ")";
      diag->warn(msg.str());
    }
  } else if (diag != nullptr) {
    // 1x1: conditioning is relative to unit scale
    const double cond = 1.0 / std::abs(a(0, 0));
    if (cond > limits.warn_condition) {
      std::ostringstream msg;
      msg << which << " nearly singular (|value| = " << std::abs(a(0, 0)) << ")";
      diag->warn(msg.str());
    }
  }
  return a.inverse();
}

bool is_symmetric_positive_definite(const Matrix& a, double sym_tol) {
  if (a.rows() == 0 || a.rows() != a.cols()) return false;
  if (!a.allFinite()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > sym_tol * scale) return false;
  Eigen::LLT<Matrix> llt(a);
  return llt.info() == Eigen::Success;
}

Vector symmetric_eigenvalues(const Matrix& a) {
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace dynastep
