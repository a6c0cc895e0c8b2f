#include "dynastep/reference.hpp"

namespace dynastep {

ReferenceSignal::ReferenceSignal(std::size_t dim, Vector initial_state, Derivative derivative,
                                 Sampler sampler)
    : dim_(dim),
      initial_(std::move(initial_state)),
      derivative_(std::move(derivative)),
      sampler_(std::move(sampler)) {
  if (dim_ == 0) throw DimensionError("ReferenceSignal: dimension must be positive");
  if (!derivative_ || !sampler_) throw ConfigError("ReferenceSignal: missing callable");
}

ReferenceSignal ReferenceSignal::from_functions(std::size_t dim, std::function<Vector(double)> r,
                                                std::function<Vector(double)> rdot,
                                                std::function<Vector(double)> rddot) {
  auto deriv = [](double, const Vector&) { return Vector(0); };
  auto sampler = [r = std::move(r), rdot = std::move(rdot), rddot = std::move(rddot)](
                     double t, const Vector&) { return ReferenceSample{r(t), rdot(t), rddot(t)}; };
  return ReferenceSignal(dim, Vector(0), deriv, sampler);
}

namespace {

double van_der_pol_accel(double mu, double r, double rdot) {
  return -r + mu * (1.0 - r * r) * rdot;
}

}  // namespace

ReferenceSignal ReferenceSignal::van_der_pol(double mu, double r0, double rdot0) {
  Vector w0(2);
  w0 << r0, rdot0;
  auto deriv = [mu](double, const Vector& w) {
    Vector d(2);
    d << w(1), van_der_pol_accel(mu, w(0), w(1));
    return d;
  };
  auto sampler = [mu](double, const Vector& w) {
    return ReferenceSample{Vector::Constant(1, w(0)), Vector::Constant(1, w(1)),
                           Vector::Constant(1, van_der_pol_accel(mu, w(0), w(1)))};
  };
  return ReferenceSignal(1, w0, deriv, sampler);
}

ReferenceSample ReferenceSignal::sample(double t, const Vector& w) const {
  ReferenceSample s = sampler_(t, w);
  const auto d = static_cast<Eigen::Index>(dim_);
  if (s.r.size() != d || s.rdot.size() != d || s.rddot.size() != d) {
    throw DimensionError("ReferenceSignal: sample dimension mismatch");
  }
  return s;
}

}  // namespace dynastep
