#include "dynastep/controller.hpp"

#include <array>
#include <cmath>
#include <random>

namespace dynastep {

namespace {

Matrix identity(std::size_t m) {
  return Matrix::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
}

void require_spd(const Matrix& k, std::size_t m, const std::string& name) {
  if (static_cast<std::size_t>(k.rows()) != m || static_cast<std::size_t>(k.cols()) != m) {
    throw DimensionError("gain " + name + " must be " + std::to_string(m) + "x" +
                         std::to_string(m));
  }
  if (!is_symmetric_positive_definite(k)) {
    throw ConfigError("gain " + name + " must be symmetric positive definite");
  }
}

}  // namespace

Vector StateLayout::flatten(const AugmentedState& s) const {
  Vector v(static_cast<Eigen::Index>(size()));
  Eigen::Index at = 0;
  const auto mm = static_cast<Eigen::Index>(m);
  for (std::size_t i = 0; i < levels; ++i) {
    v.segment(at, mm) = s.x[i];
    at += mm;
  }
  if (has_x2d) {
    v.segment(at, mm) = s.x2d;
    at += mm;
  }
  if (has_u) {
    v.segment(at, mm) = s.u;
    at += mm;
  }
  if (reference_dim > 0) {
    v.segment(at, static_cast<Eigen::Index>(reference_dim)) = s.w;
  }
  return v;
}

AugmentedState StateLayout::unflatten(const Vector& v, double t) const {
  AugmentedState s;
  s.t = t;
  Eigen::Index at = 0;
  const auto mm = static_cast<Eigen::Index>(m);
  s.x.reserve(levels);
  for (std::size_t i = 0; i < levels; ++i) {
    s.x.emplace_back(v.segment(at, mm));
    at += mm;
  }
  if (has_x2d) {
    s.x2d = v.segment(at, mm);
    at += mm;
  }
  if (has_u) {
    s.u = v.segment(at, mm);
    at += mm;
  }
  if (reference_dim > 0) {
    s.w = v.segment(at, static_cast<Eigen::Index>(reference_dim));
  }
  return s;
}

DynamicBackstepping::DynamicBackstepping(CascadeModel model, ControllerSpec spec)
    : model_(std::move(model)), spec_(std::move(spec)) {
  const std::size_t n = model_.num_levels();
  const std::size_t m = model_.dim();
  for (std::size_t k = 1; k < n; ++k) {
    if (model_.level(k).kind == LevelKind::PureFeedback && !(k == 1 && n == 2)) {
      throw UnsupportedStructure(
          "pure-feedback level " + std::to_string(k + 1) +
          ": only the first level, or the terminal level of a two-level cascade, may be "
          "pure-feedback");
    }
  }
  first_dynamic_ = model_.level(0).kind == LevelKind::PureFeedback;
  const bool terminal_pure = n == 2 && model_.level(1).kind == LevelKind::PureFeedback;

  layout_.levels = n;
  layout_.m = m;
  layout_.has_x2d = first_dynamic_ && n >= 2;
  layout_.has_u = (n == 1 && first_dynamic_) || terminal_pure;
  layout_.reference_dim = spec_.reference ? spec_.reference->state_dim() : 0;

  if (spec_.K.size() != n) {
    throw ConfigError("controller needs one gain K per level (" + std::to_string(n) + ")");
  }
  for (std::size_t k = 0; k < n; ++k) require_spd(spec_.K[k], m, "K" + std::to_string(k + 1));
  if (first_dynamic_) require_spd(spec_.Kv1, m, "Kv1");
  if (terminal_pure) require_spd(spec_.Kv2, m, "Kv2");

  const auto mm = static_cast<Eigen::Index>(m);
  if (layout_.has_x2d) {
    if (spec_.x2d0.size() == 0) spec_.x2d0 = Vector::Zero(mm);
    if (spec_.x2d0.size() != mm) throw DimensionError("x2d0 has the wrong dimension");
  }
  if (layout_.has_u) {
    if (spec_.u0.size() == 0) spec_.u0 = Vector::Zero(mm);
    if (spec_.u0.size() != mm) throw DimensionError("u0 has the wrong dimension");
  }
  if (spec_.reference && spec_.reference->dim() != m) {
    throw DimensionError("reference dimension must equal the state dimension");
  }
  if (spec_.kappa1.kind == Kappa1::Kind::Custom && !spec_.kappa1.custom) {
    throw ConfigError("custom kappa1 requires a callable");
  }
  if (spec_.residual_scaling) {
    if (!first_dynamic_) {
      throw UnsupportedStructure("residual scaling applies to a pure-feedback first level only");
    }
    if (!spec_.residual_scaling->scale) throw ConfigError("residual scaling requires S(x)");
  }
  if (!(spec_.fd_step > 0.0)) throw ConfigError("fd_step must be positive");
}

AugmentedState DynamicBackstepping::initial_state(std::vector<Vector> x0) const {
  if (x0.size() != layout_.levels) throw DimensionError("initial state: wrong number of blocks");
  for (const auto& b : x0) {
    if (static_cast<std::size_t>(b.size()) != layout_.m) {
      throw DimensionError("initial state: block of wrong dimension");
    }
  }
  AugmentedState s;
  s.x = std::move(x0);
  if (layout_.has_x2d) s.x2d = spec_.x2d0;
  if (layout_.has_u) s.u = spec_.u0;
  if (spec_.reference) s.w = spec_.reference->initial_state();
  return s;
}

ReferenceSample DynamicBackstepping::reference_at(const AugmentedState& s) const {
  if (spec_.reference) return spec_.reference->sample(s.t, s.w);
  const Vector z = Vector::Zero(static_cast<Eigen::Index>(layout_.m));
  return {z, z, z};
}

// ---------------------------------------------------------------------------
// First level

Vector DynamicBackstepping::kappa1(const Vector& e) const {
  const Matrix& k1 = spec_.K[0];
  switch (spec_.kappa1.kind) {
    case Kappa1::Kind::Linear:
      return -k1 * e;
    case Kappa1::Kind::Cubic:
      return -k1 * e.array().cube().matrix();
    case Kappa1::Kind::Custom:
      return spec_.kappa1.custom(e);
  }
  return {};
}

Matrix DynamicBackstepping::kappa1_jacobian(const Vector& e) const {
  const Matrix& k1 = spec_.K[0];
  switch (spec_.kappa1.kind) {
    case Kappa1::Kind::Linear:
      return -k1;
    case Kappa1::Kind::Cubic:
      return -k1 * (3.0 * e.array().square()).matrix().asDiagonal();
    case Kappa1::Kind::Custom:
      if (spec_.kappa1.custom_jacobian) return spec_.kappa1.custom_jacobian(e);
      return fd_jacobian(spec_.kappa1.custom, e, spec_.fd_step);
  }
  return {};
}

Vector DynamicBackstepping::first_field(const Vector& x1, const Vector& next) const {
  const std::array<Vector, 2> args{x1, next};
  return model_.eval_level(0, Blocks(args));
}

Vector DynamicBackstepping::first_field_scaled(const Vector& x1, const Vector& next) const {
  if (!spec_.residual_scaling) return first_field(x1, next);
  const auto& sc = *spec_.residual_scaling;
  if (sc.scaled_field) return sc.scaled_field(x1, next);
  return sc.scale(x1) * first_field(x1, next);
}

Matrix DynamicBackstepping::first_field_scaled_jacobian(const Vector& x1, const Vector& next,
                                                        std::size_t wrt) const {
  if (!spec_.residual_scaling) {
    const std::array<Vector, 2> args{x1, next};
    return model_.jacobian(0, Blocks(args), wrt);
  }
  const auto& sc = *spec_.residual_scaling;
  if (wrt == 1) {
    if (sc.scaled_field) {
      return fd_jacobian([&](const Vector& v) { return sc.scaled_field(x1, v); }, next,
                         spec_.fd_step);
    }
    const std::array<Vector, 2> args{x1, next};
    return sc.scale(x1) * model_.jacobian(0, Blocks(args), 1);
  }
  return fd_jacobian([&](const Vector& v) { return first_field_scaled(v, next); }, x1,
                     spec_.fd_step);
}

Matrix DynamicBackstepping::scale_inverse(const Vector& x1) const {
  if (!spec_.residual_scaling) return identity(layout_.m);
  const auto& sc = *spec_.residual_scaling;
  if (sc.inverse) return sc.inverse(x1);
  return sc.scale(x1).inverse();
}

Vector DynamicBackstepping::scaled_residual(const Vector& x1, const Vector& next,
                                            const ReferenceSample& ref) const {
  const Vector e = x1 - ref.r;
  if (!spec_.residual_scaling) {
    return first_field(x1, next) - kappa1(e) - ref.rdot;
  }
  const auto& sc = *spec_.residual_scaling;
  Vector h = first_field_scaled(x1, next);
  h -= sc.scaled_kappa ? sc.scaled_kappa(x1, e) : Vector(sc.scale(x1) * kappa1(e));
  if (spec_.tracking()) h -= sc.scale(x1) * ref.rdot;
  return h;
}

Matrix DynamicBackstepping::h1_jacobian_x1(const Vector& x1, const Vector& next,
                                           const ReferenceSample& ref) const {
  if (!spec_.residual_scaling) {
    const std::array<Vector, 2> args{x1, next};
    return model_.jacobian(0, Blocks(args), 0) - kappa1_jacobian(x1 - ref.r);
  }
  return fd_jacobian([&](const Vector& v) { return scaled_residual(v, next, ref); }, x1,
                     spec_.fd_step);
}

// Explicit time dependence of h1 through r(t): h1 = f~ - S kappa1(x1 - r) - S r'.
Vector DynamicBackstepping::h1_time_rate(const Vector& x1, const ReferenceSample& ref) const {
  if (!spec_.tracking()) return Vector::Zero(static_cast<Eigen::Index>(layout_.m));
  const Vector e = x1 - ref.r;
  if (!spec_.residual_scaling) {
    return kappa1_jacobian(e) * ref.rdot - ref.rddot;
  }
  const auto& sc = *spec_.residual_scaling;
  const Matrix s = sc.scale(x1);
  Matrix dkappa;
  if (sc.scaled_kappa) {
    dkappa = fd_jacobian([&](const Vector& v) { return sc.scaled_kappa(x1, v); }, e,
                         spec_.fd_step);
  } else {
    dkappa = s * kappa1_jacobian(e);
  }
  return dkappa * ref.rdot - s * ref.rddot;
}

const Vector& DynamicBackstepping::first_dynamic_state(const AugmentedState& s) const {
  if (!first_dynamic_) throw UnsupportedStructure("first level has no stativized virtual control");
  return layout_.levels >= 2 ? s.x2d : s.u;
}

Vector DynamicBackstepping::eval_h1(const AugmentedState& s) const {
  const Vector next = first_dynamic_ ? first_dynamic_state(s) : desired(s, 1);
  return scaled_residual(s.x[0], next, reference_at(s));
}

Vector DynamicBackstepping::x2d_dot(const AugmentedState& s) const {
  const ReferenceSample ref = reference_at(s);
  const Vector& x1 = s.x[0];
  const Vector& v = first_dynamic_state(s);
  const Vector h = scaled_residual(x1, v, ref);
  const Matrix jv = first_field_scaled_jacobian(x1, v, 1);
  Vector rate = -spec_.Kv1 * jv.transpose() * h;
  if (spec_.x2d_dot_variant == X2dDotVariant::Simplified) return rate;

  const Matrix jv_inv = checked_inverse(jv, "dh1/dx2d", spec_.limits);
  const Matrix a = h1_jacobian_x1(x1, v, ref);
  const Vector coupling = scale_inverse(x1).transpose() * (x1 - ref.r);
  rate -= jv_inv * (a * first_field(x1, v) + h1_time_rate(x1, ref) + coupling);
  return rate;
}

// ---------------------------------------------------------------------------
// Recursive structure

Vector DynamicBackstepping::plant_rate(const AugmentedState& s, std::size_t k) const {
  std::vector<Vector> args(s.x.begin(), s.x.begin() + static_cast<std::ptrdiff_t>(k + 1));
  args.push_back(k + 1 < layout_.levels ? s.x[k + 1] : control(s));
  return model_.eval_level(k, Blocks(args));
}

// Target derivative kappa_j of level j (0-based): x_{j+1}' should equal it.
Vector DynamicBackstepping::target(const AugmentedState& s, std::size_t j) const {
  if (j == 0) {
    const ReferenceSample ref = reference_at(s);
    return kappa1(s.x[0] - ref.r) + ref.rdot;
  }
  if (j == 1 && first_dynamic_) return kappa2(s);
  // Level j-1 is strict-affine: x_j' = f + g x_{j+1} with x_j tracking x_{jd}.
  const std::vector<Vector> prev(s.x.begin(), s.x.begin() + static_cast<std::ptrdiff_t>(j));
  const Matrix g_prev = model_.input_gain(j - 1, Blocks(prev));
  const Vector eps = epsilon(s, j);
  const Vector eps_prev = epsilon(s, j - 1);
  const Matrix e_prev = epsilon_jacobian(s, j - 1);
  return -spec_.K[j] * eps - (e_prev * g_prev).transpose() * eps_prev + desired_rate(s, j);
}

// Desired value of x_{j+1} (0-based block j), or u for j == n.
Vector DynamicBackstepping::desired(const AugmentedState& s, std::size_t j) const {
  const std::size_t n = layout_.levels;
  if (j == 1 && first_dynamic_) return first_dynamic_state(s);
  if (j == n && layout_.has_u) return s.u;
  return explicit_desired(s, j);
}

Vector DynamicBackstepping::explicit_desired(const AugmentedState& s, std::size_t j) const {
  const std::size_t k = j - 1;  // strict-affine level producing x_{j+1}
  const std::vector<Vector> states(s.x.begin(), s.x.begin() + static_cast<std::ptrdiff_t>(k + 1));
  const Matrix g = model_.input_gain(k, Blocks(states));
  const auto lu = g.fullPivLu();
  if (!lu.isInvertible() || std::abs(g.determinant()) < spec_.limits.min_abs_det) {
    throw SingularMatrix("input gain of level " + std::to_string(k + 1) + " is not invertible");
  }
  return lu.solve(-model_.drift(k, Blocks(states)) + target(s, k));
}

Vector DynamicBackstepping::desired_rate(const AugmentedState& s, std::size_t j) const {
  if (j == 1 && first_dynamic_) return x2d_dot(s);
  // Explicit x_{jd} depends on x_1..x_j, x2d, the reference state and t.
  return rate_along_flow(s, j, [this, j](const AugmentedState& p) { return explicit_desired(p, j); });
}

Vector DynamicBackstepping::rate_along_flow(
    const AugmentedState& s, std::size_t upto_level,
    const std::function<Vector(const AugmentedState&)>& fn) const {
  // Packs (x_1..x_upto, x2d, w, t) and differentiates fn along their closed-loop rates.
  const auto mm = static_cast<Eigen::Index>(layout_.m);
  const auto nblk = static_cast<Eigen::Index>(upto_level);
  const bool with_x2d = layout_.has_x2d;
  const auto wdim = static_cast<Eigen::Index>(layout_.reference_dim);
  const Eigen::Index size = nblk * mm + (with_x2d ? mm : 0) + wdim + 1;

  Vector base(size);
  Vector dir(size);
  Eigen::Index at = 0;
  for (std::size_t k = 0; k < upto_level; ++k) {
    base.segment(at, mm) = s.x[k];
    dir.segment(at, mm) = plant_rate(s, k);
    at += mm;
  }
  if (with_x2d) {
    base.segment(at, mm) = s.x2d;
    dir.segment(at, mm) = x2d_dot(s);
    at += mm;
  }
  if (wdim > 0) {
    base.segment(at, wdim) = s.w;
    dir.segment(at, wdim) = spec_.reference->derivative(s.t, s.w);
    at += wdim;
  }
  base(at) = s.t;
  dir(at) = 1.0;

  auto along = [&](const Vector& p) {
    AugmentedState q = s;
    Eigen::Index i = 0;
    for (std::size_t k = 0; k < upto_level; ++k) {
      q.x[k] = p.segment(i, mm);
      i += mm;
    }
    if (with_x2d) {
      q.x2d = p.segment(i, mm);
      i += mm;
    }
    if (wdim > 0) {
      q.w = p.segment(i, wdim);
      i += wdim;
    }
    q.t = p(i);
    return fn(q);
  };
  // t is unbounded in magnitude; keep the step relative to the state part only.
  Vector base_no_t = base;
  base_no_t(at) = 0.0;
  const double dir_norm = inf_norm(dir);
  const double eps = spec_.fd_step * std::max(1.0, inf_norm(base_no_t)) / dir_norm;
  return (along(base + eps * dir) - along(base - eps * dir)) / (2.0 * eps);
}

Vector DynamicBackstepping::epsilon(const AugmentedState& s, std::size_t j) const {
  if (j == 0) return s.x[0] - reference_at(s).r;
  if (j == 1 && first_dynamic_ && spec_.kappa2_variant == Kappa2Variant::Full) {
    return first_field_scaled(s.x[0], s.x[1]) - first_field_scaled(s.x[0], s.x2d);
  }
  return s.x[j] - desired(s, j);
}

Matrix DynamicBackstepping::epsilon_jacobian(const AugmentedState& s, std::size_t j) const {
  if (j == 1 && first_dynamic_ && spec_.kappa2_variant == Kappa2Variant::Full) {
    return first_field_scaled_jacobian(s.x[0], s.x[1], 1);
  }
  return identity(layout_.m);
}

// ---------------------------------------------------------------------------
// Second level

Vector DynamicBackstepping::kappa2(const AugmentedState& s) const {
  if (layout_.levels < 2) throw UnsupportedStructure("kappa2 needs at least two levels");
  if (!first_dynamic_) return target(s, 1);

  const ReferenceSample ref = reference_at(s);
  const Vector& x1 = s.x[0];
  const Vector& x2 = s.x[1];
  const Vector& x2d = s.x2d;
  const Matrix& k2 = spec_.K[1];
  const Vector xd_rate = x2d_dot(s);

  if (spec_.kappa2_variant == Kappa2Variant::SimplifiedLipschitz) {
    return -k2 * (x2 - x2d) + xd_rate;
  }

  const Vector e = x1 - ref.r;
  const Vector h = scaled_residual(x1, x2d, ref);
  const Matrix a = h1_jacobian_x1(x1, x2d, ref);
  const Vector coupling = scale_inverse(x1).transpose() * (e + a.transpose() * h);

  if (spec_.kappa2_variant == Kappa2Variant::SimplifiedFirstOrder) {
    const Matrix jv = first_field_scaled_jacobian(x1, x2d, 1);
    const Matrix factor =
        spec_.first_order_factor == FirstOrderFactor::Transpose
            ? Matrix(jv.transpose())
            : Matrix(checked_inverse(jv, "dh1/dx2d", spec_.limits).transpose());
    return -k2 * (x2 - x2d) - factor * coupling + xd_rate;
  }

  const Matrix b = first_field_scaled_jacobian(x1, x2, 1);
  const Matrix b_inv = checked_inverse(b, "df1/dx2", spec_.limits);
  const Vector delta = first_field_scaled(x1, x2) - first_field_scaled(x1, x2d);
  const Matrix d_fx1 =
      first_field_scaled_jacobian(x1, x2, 0) - first_field_scaled_jacobian(x1, x2d, 0);
  const Matrix p = first_field_scaled_jacobian(x1, x2d, 1);
  const Vector gamma =
      spec_.gamma ? (*spec_.gamma)(x1, x2, x2d) : Vector(-k2 * b.transpose() * delta);
  return gamma - b_inv * (coupling + d_fx1 * first_field(x1, x2) - p * xd_rate);
}

Vector DynamicBackstepping::eval_h2(const AugmentedState& s) const {
  if (!(layout_.levels == 2 && layout_.has_u)) {
    throw UnsupportedStructure("h2 exists only for a pure-feedback second (terminal) level");
  }
  const std::array<Vector, 3> args{s.x[0], s.x[1], s.u};
  return model_.eval_level(1, Blocks(args)) - kappa2(s);
}

Vector DynamicBackstepping::u_dot(const AugmentedState& s) const {
  if (!layout_.has_u) throw UnsupportedStructure("the control is not a stativized state");
  if (layout_.levels == 1) return x2d_dot(s);

  const double h = spec_.fd_step;
  auto partial = [&](auto&& slot) {
    AugmentedState q = s;
    Vector& target_slot = slot(q);
    const Vector base = target_slot;
    return fd_jacobian(
        [&](const Vector& v) {
          target_slot = v;
          return eval_h2(q);
        },
        base, h);
  };

  const Vector h2 = eval_h2(s);
  const Matrix j_u = partial([](AugmentedState& q) -> Vector& { return q.u; });
  const Matrix j_u_inv = checked_inverse(j_u, "dh2/du", spec_.limits);

  Vector drift = partial([](AugmentedState& q) -> Vector& { return q.x[0]; }) * plant_rate(s, 0) +
                 partial([](AugmentedState& q) -> Vector& { return q.x[1]; }) * plant_rate(s, 1);
  if (layout_.has_x2d) {
    drift += partial([](AugmentedState& q) -> Vector& { return q.x2d; }) * x2d_dot(s);
  }
  if (spec_.tracking()) {
    // Explicit time dependence of h2 through the reference (t, w).
    const auto wdim = static_cast<Eigen::Index>(layout_.reference_dim);
    const Vector wdot = wdim > 0 ? spec_.reference->derivative(s.t, s.w) : Vector(0);
    const double w_scale = wdim > 0 ? std::max(1.0, inf_norm(s.w)) : 1.0;
    const double w_rate = wdim > 0 ? std::max(1.0, inf_norm(wdot)) : 1.0;
    const double step = h * w_scale / w_rate;
    AugmentedState plus = s;
    AugmentedState minus = s;
    plus.t += step;
    minus.t -= step;
    if (wdim > 0) {
      plus.w += step * wdot;
      minus.w -= step * wdot;
    }
    drift += (eval_h2(plus) - eval_h2(minus)) / (2.0 * step);
  }
  drift += epsilon_jacobian(s, 1).transpose() * epsilon(s, 1);

  return -spec_.Kv2 * j_u.transpose() * h2 - j_u_inv * drift;
}

// ---------------------------------------------------------------------------
// Assembly

Vector DynamicBackstepping::strict_level_control(const AugmentedState& s) const {
  if (model_.level(layout_.levels - 1).kind != LevelKind::StrictAffine) {
    throw UnsupportedStructure("terminal level is not strict-affine");
  }
  return explicit_desired(s, layout_.levels);
}

Vector DynamicBackstepping::control(const AugmentedState& s) const {
  if (layout_.has_u) return s.u;
  return explicit_desired(s, layout_.levels);
}

std::vector<Vector> DynamicBackstepping::virtual_controls(const AugmentedState& s) const {
  std::vector<Vector> out;
  for (std::size_t j = 1; j < layout_.levels; ++j) out.push_back(desired(s, j));
  return out;
}

std::vector<Vector> DynamicBackstepping::residuals(const AugmentedState& s) const {
  std::vector<Vector> out;
  if (first_dynamic_) out.push_back(eval_h1(s));
  if (layout_.levels == 2 && layout_.has_u) out.push_back(eval_h2(s));
  return out;
}

std::vector<Vector> DynamicBackstepping::lyapunov_coordinates(const AugmentedState& s) const {
  std::vector<Vector> z;
  z.push_back(epsilon(s, 0));
  if (first_dynamic_) z.push_back(eval_h1(s));
  for (std::size_t j = 1; j < layout_.levels; ++j) z.push_back(epsilon(s, j));
  if (layout_.levels == 2 && layout_.has_u) z.push_back(eval_h2(s));
  return z;
}

AugmentedState DynamicBackstepping::closed_loop_rhs(const AugmentedState& s,
                                                    Diagnostics* diag) const {
  if (!all_finite(layout_.flatten(s))) {
    throw NonFiniteState("closed-loop state is not finite at t = " + std::to_string(s.t));
  }
  AugmentedState d;
  d.t = s.t;
  d.x.reserve(layout_.levels);
  for (std::size_t k = 0; k < layout_.levels; ++k) d.x.push_back(plant_rate(s, k));
  if (layout_.has_x2d) d.x2d = x2d_dot(s);
  if (layout_.has_u) d.u = u_dot(s);
  if (layout_.reference_dim > 0) d.w = spec_.reference->derivative(s.t, s.w);

  if (!all_finite(layout_.flatten(d))) {
    throw NonFiniteState("closed-loop derivative is not finite at t = " + std::to_string(s.t));
  }
  if (diag != nullptr) {
    if (auto v = model_.domain_violation(Blocks(s.x))) diag->warn(*v);
    report_conditioning(s, *diag);
  }
  return d;
}

void DynamicBackstepping::report_conditioning(const AugmentedState& s, Diagnostics& diag) const {
  const ReferenceSample ref = reference_at(s);
  if (first_dynamic_ && spec_.x2d_dot_variant == X2dDotVariant::Full) {
    const Vector& v = first_dynamic_state(s);
    checked_inverse(first_field_scaled_jacobian(s.x[0], v, 1), "dh1/dx2d", spec_.limits, &diag);
  }
  if (first_dynamic_ && layout_.levels >= 2 && spec_.kappa2_variant == Kappa2Variant::Full) {
    checked_inverse(first_field_scaled_jacobian(s.x[0], s.x[1], 1), "df1/dx2", spec_.limits,
                    &diag);
  }
  (void)ref;
}

GainConditionReport DynamicBackstepping::check_gain_conditions(const AugmentedState& s,
                                                               std::size_t samples) const {
  GainConditionReport rep;
  if (!first_dynamic_) return rep;
  rep.applicable = true;

  const ReferenceSample ref = reference_at(s);
  const Vector& x1 = s.x[0];
  const Vector& v = first_dynamic_state(s);
  const Matrix& k1 = spec_.K[0];
  const Matrix j = first_field_scaled_jacobian(x1, v, 1);
  const Matrix a = h1_jacobian_x1(x1, v, ref);
  const Matrix k1_inv = k1.inverse();

  rep.kv1_lhs = j * spec_.Kv1 * j.transpose();
  rep.kv1_rhs = 0.75 * k1_inv - 0.25 * (a + a.transpose()) + 0.75 * a * k1 * a.transpose();
  rep.kv1_margin = symmetric_eigenvalues(rep.kv1_lhs - rep.kv1_rhs).minCoeff();
  rep.kv1_ok = rep.kv1_margin > 0.0;

  // Lipschitz constant of f1 in its second argument, sampled over the domain box.
  const auto mm = static_cast<Eigen::Index>(layout_.m);
  const DomainBox& box = model_.domain();
  const Vector x_lo = box.lower.segment(0, mm);
  const Vector x_hi = box.upper.segment(0, mm);
  const Vector n_lo = layout_.levels >= 2 ? Vector(box.lower.segment(mm, mm)) : box.control_lower;
  const Vector n_hi = layout_.levels >= 2 ? Vector(box.upper.segment(mm, mm)) : box.control_upper;
  std::mt19937_64 rng(0x5eedULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](const Vector& lo, const Vector& hi) {
    Vector p(lo.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = lo(i) + (hi(i) - lo(i)) * unit(rng);
    return p;
  };
  double lip = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const Vector px = draw(x_lo, x_hi);
    const Vector pa = draw(n_lo, n_hi);
    const Vector pb = draw(n_lo, n_hi);
    const double dist = (pa - pb).norm();
    if (dist == 0.0) continue;
    const double ratio = (first_field_scaled(px, pa) - first_field_scaled(px, pb)).norm() / dist;
    if (std::isfinite(ratio)) lip = std::max(lip, ratio);
  }
  rep.lipschitz = lip;

  if (layout_.levels < 2) return rep;
  rep.k2_min_eig = symmetric_eigenvalues(spec_.K[1]).minCoeff();
  if (std::abs(j.determinant()) < spec_.limits.min_abs_det) {
    rep.k2_bound = std::numeric_limits<double>::infinity();
    rep.k2_ok = false;
    return rep;
  }
  const Matrix j_inv = j.inverse();
  rep.coupling_m = a.transpose() * j_inv.transpose() * spec_.Kv1.inverse() * j_inv * a;
  const double max_k1_inv = symmetric_eigenvalues(k1_inv).maxCoeff();
  const double max_m = symmetric_eigenvalues(rep.coupling_m).maxCoeff();
  rep.k2_bound = lip * lip / 4.0 * (max_k1_inv + max_m);
  rep.k2_ok = rep.k2_min_eig > rep.k2_bound;
  return rep;
}

}  // namespace dynastep
