#pragma once

#include "mixmds/rng.hpp"

namespace mixmds {

struct GammaShapeRate {
  double shape = 0.0;
  double rate = 0.0;
};

struct InvGammaShapeScale {
  double shape = 0.0;
  double scale = 0.0;
};

// Gamma with requested first two moments: shape = mean^2/var, rate = mean/var.
GammaShapeRate gamma_mean_var_to_shape_rate(double mean, double var);

// Inverse gamma with requested first two moments: shape = mean^2/var + 2,
// scale = mean * (shape - 1). shape > 2 by construction, so both moments exist.
InvGammaShapeScale invgamma_mean_var_to_shape_scale(double mean, double var);

double gamma_logpdf(double x, double shape, double rate);
double invgamma_logpdf(double x, double shape, double scale);
double normal_logpdf(double x, double mean, double sd);

// How the prior on a multiplicative weight w > 0 is parameterized.
//   GammaOnInverseSquare: w^-2 ~ Gamma(a_w, rate=b_w), density carried to w
//                         with the exact change-of-variables Jacobian.
//   InvGammaOnW:          w ~ Inv-Gamma(a_w, b_w).
// The first is the model definition; the second is kept behind this switch.
enum class WeightPriorForm { GammaOnInverseSquare, InvGammaOnW };

struct WeightHyper {
  double a_w = 0.0;
  double b_w = 0.0;
};

// Solves for (a_w, b_w) such that w with w^-2 ~ Gamma(a_w, b_w) has
// E[w] = target_mean and Var(w) = target_var, using
//   E[w]   = sqrt(b_w) * Gamma(a_w - 1/2) / Gamma(a_w)
//   E[w^2] = b_w / (a_w - 1)
// Bisection on a_w (> 1 so the second moment is finite), then b_w in closed form.
WeightHyper solve_weight_hyperparams(double target_mean = 1.0,
                                     double target_var = 10.0);

// log density of the weight w itself under the selected prior form.
double weight_logpdf(double w, double a_w, double b_w, WeightPriorForm form);

double draw_weight(Rng& rng, double a_w, double b_w, WeightPriorForm form);

}  // namespace mixmds
