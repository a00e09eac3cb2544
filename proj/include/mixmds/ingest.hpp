#pragma once

#include <filesystem>

#include "mixmds/types.hpp"

namespace mixmds::ingest {

// Repeated-trial signal arrays: f[subject][stimulus][trial] is a series of T
// samples. Trial counts may differ per (subject, stimulus) but must be >= 2.
struct TrialSignals {
  int S = 0;
  int T = 0;
  std::vector<int> group;  // per subject, 1-based group id
  std::vector<std::vector<std::vector<std::vector<double>>>> f;

  int n_subjects() const { return static_cast<int>(f.size()); }
  void validate() const;
};

// Rescaled trial means per subject and stimulus:
//   mean over trials, divided elementwise in t by the subject's average
//   (across stimuli) within-trial standard deviation.
// Throws ValidationError naming (subject, t) when the pooled deviation is 0.
std::vector<std::vector<std::vector<double>>> preprocess_trials(
    const TrialSignals& signals);

// Euclidean distances between rescaled stimulus representations, lower
// triangle. Throws if any distance is zero.
DistanceDataset distances_from_signals(
    const std::vector<std::vector<std::vector<double>>>& rescaled,
    const std::vector<int>& group, int n_groups);

struct SyntheticSpec {
  int S = 4;
  int J = 2;
  std::vector<int> n{14, 14};
  int H_true = 3;
  std::vector<double> feature_scales{1.0, 0.7, 0.4};  // per true dimension
  double weight_mean = 1.0;  // moment targets for the true weights
  double weight_var = 10.0;
  std::vector<double> noise_var{0.02, 0.05};  // sigma2_eps per group
  std::uint64_t seed = 1;

  void validate() const;
};

struct GroundTruth {
  Eigen::MatrixXd eta;                  // S x H_true
  Eigen::VectorXd w_group;              // J
  std::vector<Eigen::MatrixXd> w_ind;   // per group n_j x H_true
  Eigen::VectorXd sigma2;               // J
  std::vector<Eigen::MatrixXd> delta;   // per group n_j x P latent distances
};

// Draws shared features with decreasing column scales, weights from their
// prior, forms true latent distances and observes d ~ Gamma(mean, var).
// Degenerate feature draws (a latent distance below 1e-6) reseed with a
// warning on stderr; deterministic given the spec seed.
std::pair<DistanceDataset, GroundTruth> generate_synthetic(const SyntheticSpec& spec);

// One replicate dataset from a fixed state: d ~ Gamma(mean = latent distance,
// var = sigma2_eps of the group). Used by moment-identity checks.
DistanceDataset simulate_distances(const ModelState& state,
                                   const std::vector<int>& n, Rng& rng);

// Long-format CSV (columns group,subject,s,r,d with 1-based ids, r < s).
DistanceDataset read_distance_csv(const std::filesystem::path& path);
void write_distance_csv(const std::filesystem::path& path, const DistanceDataset& data,
                        const std::string& header_comment = "");

// Trial signals: JSON sidecar with shapes next to a little-endian float64
// binary in subject-major [i][s][m][t] order.
TrialSignals read_signals(const std::filesystem::path& meta_json_path);
void write_signals(const std::filesystem::path& meta_json_path,
                   const TrialSignals& signals);

}  // namespace mixmds::ingest
