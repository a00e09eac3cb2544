#pragma once

#include <cmath>

#include "mixmds/ingest.hpp"
#include "mixmds/model.hpp"
#include "mixmds/sampler.hpp"

namespace testutil {

using namespace mixmds;

// hyperparameters with every derived field filled, no data needed
inline Hyperparameters basic_hp(int J, double sigma2_mean = 1.0,
                                double sigma2_var = 1.0) {
  Hyperparameters hp;
  const WeightHyper wh = solve_weight_hyperparams(hp.weight_mean, hp.weight_var);
  hp.a_w = wh.a_w;
  hp.b_w = wh.b_w;
  hp.H_max = 3;
  hp.sigma2_prior_mean.assign(J, sigma2_mean);
  hp.sigma2_prior_var.assign(J, sigma2_var);
  return hp;
}

// small random-but-valid state for property tests
inline ModelState random_state(int S, int J, const std::vector<int>& n, int H,
                               Rng& rng) {
  ModelState st;
  st.H = H;
  st.eta.resize(S, H);
  for (int s = 0; s < S; ++s) {
    for (int h = 0; h < H; ++h) st.eta(s, h) = rng.normal(0.0, 1.0);
  }
  st.phi.resize(S, H);
  for (int s = 0; s < S; ++s) {
    for (int h = 0; h < H; ++h) st.phi(s, h) = rng.gamma(2.0, 2.0);
  }
  st.mgp_delta.resize(H);
  for (int h = 0; h < H; ++h) st.mgp_delta[h] = rng.gamma(2.0, 1.0);
  st.w_group.resize(J);
  for (int j = 0; j < J; ++j) st.w_group[j] = std::exp(rng.normal(0.0, 0.4));
  st.w_ind.resize(J);
  for (int j = 0; j < J; ++j) {
    st.w_ind[j].resize(n[j], H);
    for (int i = 0; i < n[j]; ++i) {
      for (int h = 0; h < H; ++h) st.w_ind[j](i, h) = std::exp(rng.normal(0.0, 0.4));
    }
  }
  st.sigma2_eps.resize(J);
  for (int j = 0; j < J; ++j) st.sigma2_eps[j] = rng.gamma(3.0, 6.0) + 0.05;
  return st;
}

// dataset simulated from a random state (valid by construction)
inline DistanceDataset random_dataset(int S, int J, const std::vector<int>& n, int H,
                                      Rng& rng, ModelState* state_out = nullptr) {
  ModelState st = random_state(S, J, n, H, rng);
  DistanceDataset ds = ingest::simulate_distances(st, n, rng);
  if (state_out != nullptr) *state_out = st;
  return ds;
}

inline double sample_mean(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m += x;
  return m / xs.size();
}

inline double sample_var(const std::vector<double>& xs) {
  const double m = sample_mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / (xs.size() - 1);
}

}  // namespace testutil
