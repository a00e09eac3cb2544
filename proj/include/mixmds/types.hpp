#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixmds/distributions.hpp"

namespace mixmds {

// Raised when input data or configuration violates a documented contract.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Observed pairwise dissimilarities, lower-triangular storage: for subject i of
// group j, d[j](i, pair_index(s, r)) holds the dissimilarity of stimuli (s, r),
// r < s. All entries are finite and strictly positive.
struct DistanceDataset {
  int J = 0;                        // groups
  int S = 0;                        // stimuli
  std::vector<int> n;               // subjects per group
  std::vector<Eigen::MatrixXd> d;   // per group: n[j] x S(S-1)/2

  std::vector<std::string> group_names;     // optional labels
  std::vector<std::string> stimulus_names;  // optional labels

  int n_pairs() const { return S * (S - 1) / 2; }
  int n_total() const;

  // Canonical pair order (1,0),(2,0),(2,1),(3,0),... with 0-based indices.
  static int pair_index(int s, int r);

  double value(int j, int i, int s, int r) const {
    return d[j](i, pair_index(s, r));
  }

  void validate() const;  // throws ValidationError with offending indices
};

// One MCMC configuration. H is the active dimension count; all matrices are
// sized to H columns.
struct ModelState {
  int H = 0;
  Eigen::MatrixXd eta;                  // S x H shared features
  Eigen::VectorXd w_group;              // J group weights, > 0
  std::vector<Eigen::MatrixXd> w_ind;   // per group: n[j] x H, > 0
  Eigen::MatrixXd phi;                  // S x H local precisions, > 0
  Eigen::VectorXd mgp_delta;            // H multiplicative increments, > 0
  Eigen::VectorXd sigma2_eps;           // J group noise variances, > 0

  int S() const { return static_cast<int>(eta.rows()); }
  int J() const { return static_cast<int>(w_group.size()); }

  void validate(int S, int J, const std::vector<int>& n) const;
};

// How the dimension-adaptation reconstruction error is normalized.
//   PerSubjectRatio: ||D_obs - Delta||_F / ||D_obs||_F per subject, averaged.
//   GlobalRatio:     average Frobenius distance over the average observed norm.
enum class ErrorNorm { PerSubjectRatio, GlobalRatio };

// Fixed prior and tuning constants. Fields defaulted to 0 or empty are derived
// from the data at finalize() time.
struct Hyperparameters {
  // MGP prior
  double a1 = 2.0;
  double a2 = 3.0;
  double nu = 3.0;

  // Weight prior: moment targets, solved (a_w, b_w), parameterization switch.
  double weight_mean = 1.0;
  double weight_var = 10.0;
  double a_w = 0.0;  // derived unless set explicitly
  double b_w = 0.0;
  WeightPriorForm weight_prior = WeightPriorForm::GammaOnInverseSquare;

  // Noise prior moments per group; empty => mean set to the empirical variance
  // of observed distances per group and var to 10x that mean squared.
  std::vector<double> sigma2_prior_mean;
  std::vector<double> sigma2_prior_var;

  // Dimension adaptation
  double dimension_error_threshold = 0.9;  // D_T
  double adapt_alpha0 = 0.0;               // >= 0
  double adapt_alpha1 = -5e-4;             // < 0
  int H_init = 1;
  int H_max = 0;  // 0 => S - 1 at finalize time
  ErrorNorm error_norm = ErrorNorm::PerSubjectRatio;

  // Adaptive Metropolis
  double proposal_scale_init = 0.5;
  double target_accept = 0.44;
  int adapt_batch = 50;

  std::uint64_t seed = 20260810;

  bool finalized() const { return a_w > 0.0 && b_w > 0.0 && H_max > 0; }

  // Fills derived fields from the data and checks every invariant.
  void finalize(const DistanceDataset& data);
  void validate(int J) const;
};

}  // namespace mixmds
