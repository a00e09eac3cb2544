#pragma once

#include "mixmds/sampler.hpp"

namespace mixmds::diagnostics {

// Gelman-Rubin potential scale reduction factor over >= 2 equal-length chains.
// Variant used (documented for cross-implementation parity): with m chains of
// n draws, W the mean within-chain sample variance (n-1 denominator) and
// B/n the sample variance of the chain means,
//   Vhat = (n-1)/n * W + (m+1)/m * B/n,   PSRF = sqrt(Vhat / W),
// floored at 0.99. Zero W with nonzero B reports +inf; zero W and B gives 1.
double psrf(const std::vector<std::vector<double>>& chains);

// Brooks-Gelman multivariate PSRF: sqrt((n-1)/n + (m+1)/m * lambda1) with
// lambda1 the largest eigenvalue of W^-1 B/n. +inf when W is not positive
// definite.
double mpsrf(const std::vector<Eigen::MatrixXd>& chains);  // each n x dim

struct EssResult {
  double ess = 0.0;
  bool zero_variance = false;
};

// Effective sample size n / (1 + 2 sum rho_k) with Geyer's initial monotone
// positive sequence truncation; clamped to (0, n]. Constant series report n
// with the zero-variance flag set.
EssResult ess(const std::vector<double>& series);

struct QuantityDiagnostic {
  std::string name;
  double psrf = 0.0;
  double ess = 0.0;  // summed across chains
  bool zero_variance = false;
};

struct DiagnosticsReport {
  std::vector<QuantityDiagnostic> quantities;  // delta_ind, sigma2, H
  double mpsrf_delta = 0.0;                    // over the individual-distance vector
  double psrf_threshold = 1.1;
  std::vector<std::string> flags;  // quantities with PSRF > threshold

  bool clean() const { return flags.empty(); }
};

// Runs the full diagnostic battery on >= 2 chains sharing one schedule:
// univariate PSRF and ESS for every individual latent distance, each group
// noise variance and H, plus the multivariate PSRF over the distance vector.
// Per-quantity work runs under OpenMP when `parallel`.
DiagnosticsReport diagnose(const std::vector<sampler::ChainOutput>& chains,
                           double psrf_threshold = 1.1, bool parallel = true);

}  // namespace mixmds::diagnostics
