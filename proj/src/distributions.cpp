#include "mixmds/distributions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mixmds {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogTwoPi = 1.8378770664093454836;
}  // namespace

GammaShapeRate gamma_mean_var_to_shape_rate(double mean, double var) {
  if (!(mean > 0.0) || !(var > 0.0)) {
    throw std::domain_error("gamma_mean_var_to_shape_rate: mean and var must be > 0");
  }
  return {mean * mean / var, mean / var};
}

InvGammaShapeScale invgamma_mean_var_to_shape_scale(double mean, double var) {
  if (!(mean > 0.0) || !(var > 0.0)) {
    throw std::domain_error("invgamma_mean_var_to_shape_scale: mean and var must be > 0");
  }
  const double shape = mean * mean / var + 2.0;
  return {shape, mean * (shape - 1.0)};
}

double gamma_logpdf(double x, double shape, double rate) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) -
         rate * x;
}

double invgamma_logpdf(double x, double shape, double scale) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) -
         scale / x;
}

double normal_logpdf(double x, double mean, double sd) {
  if (!(sd > 0.0)) return kNegInf;
  const double z = (x - mean) / sd;
  return -0.5 * kLogTwoPi - std::log(sd) - 0.5 * z * z;
}

WeightHyper solve_weight_hyperparams(double target_mean, double target_var) {
  if (!(target_mean > 0.0) || !(target_var > 0.0)) {
    throw std::domain_error("solve_weight_hyperparams: targets must be > 0");
  }
  const double m2 = target_mean * target_mean + target_var;  // E[w^2]
  // With b = m2 * (a - 1) pinned by the second moment, the first moment
  //   E[w](a) = sqrt(b) * Gamma(a - 1/2) / Gamma(a)
  // increases from 0 to sqrt(m2) as a runs over (1, inf); solve E[w] = mean.
  auto log_mean_gap = [&](double a) {
    const double b = m2 * (a - 1.0);
    return 0.5 * std::log(b) + std::lgamma(a - 0.5) - std::lgamma(a) -
           std::log(target_mean);
  };
  double lo = 1.0 + 1e-12;
  double hi = 2.0;
  while (log_mean_gap(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 1e12) {
      throw std::runtime_error("solve_weight_hyperparams: no root with a_w > 1");
    }
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (log_mean_gap(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double a = 0.5 * (lo + hi);
  return {a, m2 * (a - 1.0)};
}

double weight_logpdf(double w, double a_w, double b_w, WeightPriorForm form) {
  if (!(w > 0.0)) return kNegInf;
  switch (form) {
    case WeightPriorForm::GammaOnInverseSquare:
      // p(w) = Gamma(w^-2 | a, b) * |d(w^-2)/dw|, |d(w^-2)/dw| = 2 w^-3
      return std::log(2.0) + a_w * std::log(b_w) - std::lgamma(a_w) -
             (2.0 * a_w + 1.0) * std::log(w) - b_w / (w * w);
    case WeightPriorForm::InvGammaOnW:
      return invgamma_logpdf(w, a_w, b_w);
  }
  return kNegInf;
}

double draw_weight(Rng& rng, double a_w, double b_w, WeightPriorForm form) {
  switch (form) {
    case WeightPriorForm::GammaOnInverseSquare:
      return 1.0 / std::sqrt(rng.gamma(a_w, b_w));
    case WeightPriorForm::InvGammaOnW:
      return rng.inv_gamma(a_w, b_w);
  }
  throw std::logic_error("draw_weight: unknown prior form");
}

}  // namespace mixmds
