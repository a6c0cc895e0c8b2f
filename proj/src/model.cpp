#include "dynastep/model.hpp"

#include "dynastep/numeric.hpp"

#include <sstream>

namespace dynastep {

LevelDynamics LevelDynamics::pure(BlockField f, std::vector<BlockMatrixField> jac) {
  LevelDynamics level;
  level.kind = LevelKind::PureFeedback;
  level.field = std::move(f);
  level.jacobians = std::move(jac);
  return level;
}

LevelDynamics LevelDynamics::strict(BlockField f, BlockMatrixField g,
                                    std::vector<BlockMatrixField> jac) {
  LevelDynamics level;
  level.kind = LevelKind::StrictAffine;
  level.field = std::move(f);
  level.gain = std::move(g);
  level.jacobians = std::move(jac);
  return level;
}

DomainBox DomainBox::uniform(std::size_t levels, std::size_t m, double state_bound,
                             double control_bound) {
  const auto n = static_cast<Eigen::Index>(levels * m);
  const auto mm = static_cast<Eigen::Index>(m);
  return DomainBox{Vector::Constant(n, -state_bound), Vector::Constant(n, state_bound),
                   Vector::Constant(mm, -control_bound), Vector::Constant(mm, control_bound)};
}

bool DomainBox::contains_states(const Vector& stacked) const {
  return stacked.size() == lower.size() && (stacked.array() >= lower.array()).all() &&
         (stacked.array() <= upper.array()).all();
}

bool DomainBox::contains_control(const Vector& u) const {
  return u.size() == control_lower.size() && (u.array() >= control_lower.array()).all() &&
         (u.array() <= control_upper.array()).all();
}

CascadeModel::CascadeModel(std::size_t m, std::vector<LevelDynamics> levels, DomainBox domain,
                           double fd_step)
    : m_(m), levels_(std::move(levels)), domain_(std::move(domain)), fd_step_(fd_step) {
  if (m_ == 0) throw DimensionError("CascadeModel: state dimension must be positive");
  if (levels_.empty()) throw DimensionError("CascadeModel: at least one level is required");
  if (!(fd_step_ > 0.0)) throw ConfigError("CascadeModel: finite-difference step must be > 0");
  const auto n = static_cast<Eigen::Index>(levels_.size() * m_);
  const auto mm = static_cast<Eigen::Index>(m_);
  if (domain_.lower.size() != n || domain_.upper.size() != n ||
      domain_.control_lower.size() != mm || domain_.control_upper.size() != mm) {
    throw DimensionError("CascadeModel: domain box does not match n*m states and m controls");
  }
  if (!(domain_.lower.array() < domain_.upper.array()).all() ||
      !(domain_.control_lower.array() < domain_.control_upper.array()).all()) {
    throw ConfigError("CascadeModel: domain box needs lower < upper componentwise");
  }
  if (!(domain_.lower.array() <= 0.0).all() || !(domain_.upper.array() >= 0.0).all()) {
    throw ConfigError("CascadeModel: domain box must contain the origin");
  }
  for (std::size_t k = 0; k < levels_.size(); ++k) {
    const auto& lv = levels_[k];
    if (!lv.field) throw ConfigError("CascadeModel: level " + std::to_string(k + 1) + " has no field");
    const std::size_t expected_jac =
        lv.kind == LevelKind::PureFeedback ? k + 2 : k + 1;
    if (!lv.jacobians.empty() && lv.jacobians.size() != expected_jac) {
      throw DimensionError("CascadeModel: level " + std::to_string(k + 1) +
                           " has the wrong number of analytic Jacobians");
    }
    if (lv.kind == LevelKind::StrictAffine && !lv.gain) {
      throw ConfigError("CascadeModel: strict level " + std::to_string(k + 1) + " has no gain");
    }
  }
}

void CascadeModel::check_args(std::size_t k, Blocks args, std::size_t expected) const {
  if (k >= levels_.size()) throw DimensionError("level index out of range");
  if (args.size() != expected) {
    throw DimensionError("level " + std::to_string(k + 1) + " expects " +
                         std::to_string(expected) + " argument blocks, got " +
                         std::to_string(args.size()));
  }
  for (const auto& a : args) {
    if (static_cast<std::size_t>(a.size()) != m_) {
      throw DimensionError("level " + std::to_string(k + 1) + ": argument block of size " +
                           std::to_string(a.size()) + ", expected " + std::to_string(m_));
    }
  }
}

Vector CascadeModel::eval_level(std::size_t k, Blocks args) const {
  check_args(k, args, k + 2);
  const auto& lv = levels_[k];
  if (lv.kind == LevelKind::PureFeedback) {
    return lv.field(args);
  }
  const Blocks states = args.first(k + 1);
  return lv.field(states) + lv.gain(states) * args[k + 1];
}

Vector CascadeModel::drift(std::size_t k, Blocks states) const {
  check_args(k, states, k + 1);
  if (levels_[k].kind != LevelKind::StrictAffine) {
    throw UnsupportedStructure("drift: level " + std::to_string(k + 1) + " is not strict-affine");
  }
  return levels_[k].field(states);
}

Matrix CascadeModel::input_gain(std::size_t k, Blocks states) const {
  check_args(k, states, k + 1);
  if (levels_[k].kind != LevelKind::StrictAffine) {
    throw UnsupportedStructure("input_gain: level " + std::to_string(k + 1) +
                               " is not strict-affine");
  }
  return levels_[k].gain(states);
}

Matrix CascadeModel::jacobian(std::size_t k, Blocks args, std::size_t wrt) const {
  check_args(k, args, k + 2);
  if (wrt > k + 1) throw DimensionError("jacobian: block index out of range");
  const auto& lv = levels_[k];
  if (lv.kind == LevelKind::StrictAffine && wrt == k + 1) {
    return lv.gain(args.first(k + 1));
  }
  if (!lv.jacobians.empty()) {
    return lv.jacobians[wrt](args);
  }
  const BlockField full = [this, k](Blocks a) { return eval_level(k, a); };
  return fd_jacobian_oracle(full, args, wrt, fd_step_);
}

std::optional<std::string> CascadeModel::domain_violation(Blocks states) const {
  if (states.size() != levels_.size()) return std::nullopt;
  Vector stacked(static_cast<Eigen::Index>(levels_.size() * m_));
  for (std::size_t i = 0; i < states.size(); ++i) {
    stacked.segment(static_cast<Eigen::Index>(i * m_), static_cast<Eigen::Index>(m_)) = states[i];
  }
  if (domain_.contains_states(stacked)) return std::nullopt;
  std::ostringstream msg;
  msg << "state left the controlled domain:";
  for (Eigen::Index i = 0; i < stacked.size(); ++i) {
    if (stacked(i) < domain_.lower(i) || stacked(i) > domain_.upper(i)) {
      msg << " component " << i + 1 << " = " << stacked(i) << " outside [" << domain_.lower(i) << ", "
          << domain_.upper(i) << "]";
    }
  }
  return msg.str();
}

}  // namespace dynastep
