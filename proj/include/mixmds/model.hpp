#pragma once

#include "mixmds/types.hpp"

namespace mixmds::model {

// Latent distances below this make the Gamma mean degenerate; the likelihood
// returns -inf for them instead of throwing, so MH simply rejects.
constexpr double kDistanceFloor = 1e-12;

// Cumulative products tau_h = prod_{l<=h} delta_l.
Eigen::VectorXd mgp_tau(const Eigen::VectorXd& mgp_delta);

// Individual feature values: eta_ind[j][i](s, h) = w_ind * w_group * eta.
std::vector<std::vector<Eigen::MatrixXd>> individual_features(const ModelState& state);

// Euclidean distance between the individual feature vectors of stimuli s and r
// for subject i of group j. Factorized form:
//   w_group[j] * sqrt(sum_h w_ind^2 * (eta[s][h] - eta[r][h])^2)
double latent_distance(const ModelState& state, int j, int i, int s, int r);

// Sum of Gamma log densities of every observed distance, with mean the latent
// distance and variance sigma2_eps of the group. Returns -inf if any latent
// distance falls below kDistanceFloor.
double log_likelihood(const ModelState& state, const DistanceDataset& data);

// Joint log prior of the state. Returns -inf for nonpositive constrained values.
double log_prior(const ModelState& state, const Hyperparameters& hp);

}  // namespace mixmds::model
