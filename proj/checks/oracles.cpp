#include "oracles.hpp"

#include <cmath>

namespace dynastep::oracle {

double ex1_h1(double x1, double x2d, const Gains& g) {
  return x1 + x2d + x2d * x2d * x2d / 5.0 + g.K1 * x1;
}

double ex1_h2(double x1, double x2, double x2d, double u, const Gains& g) {
  const double h1 = ex1_h1(x1, x2d, g);
  const double b = 1.0 + 0.6 * x2 * x2;
  const double p = 1.0 + 0.6 * x2d * x2d;
  return x1 * x2 + u + u * u * u / 7.0 +
         g.K2 * b * ((x2 + 0.2 * x2 * x2 * x2) - (x2d + 0.2 * x2d * x2d * x2d)) +
         (1.0 / b) * ((2.0 - g.K1 - g.K1 * g.K1) * x1 + 2.0 * (1.0 + g.K1) * h1 +
                      g.Kv1 * p * p * h1);
}

double ex2_h1_scaled(double R, double phi, double sigma, double K1) {
  return -sigma * R - sigma * (2.0 * phi + phi * phi) + K1 * R * R;
}

double ex3_h1(double x1, double x2d, double r, double rdot, const Gains& g) {
  return x1 + x2d + x2d * x2d * x2d / 5.0 + g.K1 * (x1 - r) - rdot;
}

double ex3_h2_transcribed(double x1, double x2, double x2d, double u, double r, double rdot,
                      double rddot, const Gains& g) {
  const double h1 = ex3_h1(x1, x2d, r, rdot, g);
  const double b = 1.0 + 0.6 * x2 * x2;
  const double p = 1.0 + 0.6 * x2d * x2d;
  return x1 * x2 + u + u * u * u / 7.0 +
         g.K2 * b * ((x2 + 0.2 * x2 * x2 * x2) - (x2d + 0.2 * x2d * x2d * x2d)) +
         (1.0 / b) * ((2.0 - g.K1 - g.K1 * g.K1) * x1 + 2.0 * (1.0 + g.K1) * h1 +
                      g.Kv1 * p * p * h1 - 2.0 * r - g.K1 * rdot - rddot);
}

double ex3_h2_derived(double x1, double x2, double x2d, double u, double r, double rdot,
                      double rddot, const Gains& g) {
  const double b = 1.0 + 0.6 * x2 * x2;
  return ex3_h2_transcribed(x1, x2, x2d, u, r, rdot, rddot, g) +
         (1.0 + g.K1) * (g.K1 * r + rdot) / b;
}

double vdp_rddot(double r, double rdot) { return -r + 0.2 * (1.0 - r * r) * rdot; }

// Closed loop x1'' + 2 x1' + 2 x1 = 0: poles -1 +/- i.
double baseline_x1(double t) { return std::exp(-t) * (std::cos(t) + std::sin(t)); }
double baseline_x2(double t) { return -2.0 * std::exp(-t) * std::sin(t); }

}  // namespace dynastep::oracle
