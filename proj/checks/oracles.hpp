#pragma once

// Hand transcriptions of the worked-example residuals, kept independent of the
// library so they can serve as oracles for the generic engine.

namespace dynastep::oracle {

struct Gains {
  double K1 = 1.0;
  double K2 = 1.0;
  double Kv1 = 1.0;
};

/// Example 1 first residual.
double ex1_h1(double x1, double x2d, const Gains& g);

/// Example 1 second residual, hand transcription.
double ex1_h2(double x1, double x2, double x2d, double u, const Gains& g);

/// Example 2 scaled first residual.
double ex2_h1_scaled(double R, double phi, double sigma, double K1);

/// Example 3 first residual.
double ex3_h1(double x1, double x2d, double r, double rdot, const Gains& g);

/// Example 3 second residual, hand transcription.
double ex3_h2_transcribed(double x1, double x2, double x2d, double u, double r, double rdot,
                      double rddot, const Gains& g);

/// Example 3 second residual with the reference terms carried through the
/// derivation: the transcribed form plus (1 + K1)(K1 r + r') / (1 + 0.6 x2^2).
double ex3_h2_derived(double x1, double x2, double x2d, double u, double r, double rdot,
                      double rddot, const Gains& g);

/// Van der Pol acceleration used by Example 3 (mu = 0.2).
double vdp_rddot(double r, double rdot);

/// Double integrator under the baseline law with K1 = K2 = 1 from (1, 0).
double baseline_x1(double t);
double baseline_x2(double t);

}  // namespace dynastep::oracle
