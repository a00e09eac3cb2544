#pragma once

#include <optional>

#include "mixmds/model.hpp"
#include "mixmds/types.hpp"

namespace mixmds::sampler {

// Per-scalar-block adaptive random-walk state (Roberts-Rosenthal batches).
struct BlockAdapt {
  double log_scale = 0.0;
  int batch_accepts = 0;
  int batch_attempts = 0;
  long long batches = 0;
  long long accepts = 0;
  long long attempts = 0;

  double rate() const {
    return attempts > 0 ? static_cast<double>(accepts) / attempts : -1.0;
  }
};

// Proposal scales for every adapted block, sized to H_max so blocks keep their
// tuning across dimension birth/death. Adaptation magnitude at batch n is
// min(0.01, n^-1/2); once frozen, scales are fixed and the kernel is
// time-homogeneous.
struct ProposalAdaptState {
  int batch_size = 50;
  double target_accept = 0.44;
  bool frozen = false;

  std::vector<std::vector<BlockAdapt>> eta;                 // S x H_max
  std::vector<BlockAdapt> sigma2;                           // J
  std::vector<std::vector<std::vector<BlockAdapt>>> w_ind;  // j, i, H_max
  std::vector<BlockAdapt> w_group;                          // J

  static ProposalAdaptState make(int S, int J, const std::vector<int>& n, int H_max,
                                 const Hyperparameters& hp);

  void record(BlockAdapt& block, bool accepted);

  // Stop adapting and restart acceptance counters, so final reported rates
  // describe the post-freeze (homogeneous) kernel.
  void freeze_and_reset();
};

struct Schedule {
  long n_iter = 100000;
  long burn_in = 4000;
  long thin = 10;
  // Iteration after which H is fixed at the median of H_trace so far and
  // proposal scales stop adapting; negative means "at burn_in".
  long freeze_H_after = -1;
  bool prior_only = false;

  long resolved_freeze() const { return freeze_H_after < 0 ? burn_in : freeze_H_after; }
  void validate() const;
};

struct ChainMeta {
  std::uint64_t seed = 0;
  long n_iter = 0;
  long burn_in = 0;
  long thin = 0;
  long freeze_H_after = 0;
  int frozen_H = 0;
  bool prior_only = false;
};

struct ChainOutput {
  std::vector<ModelState> draws;  // thinned, post burn-in
  std::vector<int> H_trace;       // per iteration, H used in that sweep
  std::vector<double> D_trace;    // per iteration reconstruction error
  ProposalAdaptState adapt;       // final per-block acceptance bookkeeping
  ChainMeta meta;
};

// --- conjugate full conditionals (paper-exact shapes and rates) -------------

GammaShapeRate delta1_conditional(const ModelState& state, const Hyperparameters& hp);
GammaShapeRate deltah_conditional(const ModelState& state, const Hyperparameters& hp,
                                  int h);  // 0-based, h >= 1
GammaShapeRate phi_conditional(const ModelState& state, const Hyperparameters& hp,
                               int s, int h);

void step_mgp_delta1(ModelState& state, const Hyperparameters& hp, Rng& rng);
void step_mgp_deltah(ModelState& state, const Hyperparameters& hp, int h, Rng& rng);
void step_phi(ModelState& state, const Hyperparameters& hp, int s, int h, Rng& rng);

// --- log-posterior differences for the Metropolis blocks --------------------
// Each returns log pi(state with block set to `proposed`) - log pi(state),
// evaluating only the prior term of the block and the likelihood terms it
// touches. `data == nullptr` drops the likelihood (prior-only chains).
// Proposal Jacobians are NOT included here; steps add them.

double posterior_delta_eta(const ModelState& state, const DistanceDataset* data,
                           const Hyperparameters& hp, int s, int h, double proposed);
double posterior_delta_sigma2(const ModelState& state, const DistanceDataset* data,
                              const Hyperparameters& hp, int j, double proposed);
double posterior_delta_w_ind(const ModelState& state, const DistanceDataset* data,
                             const Hyperparameters& hp, int j, int i, int h,
                             double proposed);
double posterior_delta_w_group(const ModelState& state, const DistanceDataset* data,
                               const Hyperparameters& hp, int j, double proposed);

void step_eta(ModelState& state, const Hyperparameters& hp, const DistanceDataset* data,
              ProposalAdaptState& adapt, int s, int h, Rng& rng);
void step_sigma2(ModelState& state, const Hyperparameters& hp,
                 const DistanceDataset* data, ProposalAdaptState& adapt, int j,
                 Rng& rng);
void step_w_individual(ModelState& state, const Hyperparameters& hp,
                       const DistanceDataset* data, ProposalAdaptState& adapt, int j,
                       int i, int h, Rng& rng);
void step_w_group(ModelState& state, const Hyperparameters& hp,
                  const DistanceDataset* data, ProposalAdaptState& adapt, int j,
                  Rng& rng);

// Average (across subjects) relative Frobenius reconstruction error between
// observed and latent distance matrices.
double reconstruction_error(const ModelState& state, const DistanceDataset& data,
                            ErrorNorm norm = ErrorNorm::PerSubjectRatio);

// With probability exp(alpha0 + alpha1 * t): add a prior-drawn dimension when
// D > D_T and H < H_max, else drop the last dimension when D <= D_T and H > 1.
void adapt_dimension(ModelState& state, const Hyperparameters& hp, double D, long t,
                     const std::vector<int>& n, Rng& rng);

// One full sweep of steps (1)-(7) over all indices.
void sweep(ModelState& state, const Hyperparameters& hp, const DistanceDataset* data,
           ProposalAdaptState& adapt, Rng& rng);

// Full prior draw with H active dimensions (also used for dimension birth).
ModelState draw_prior_state(const Hyperparameters& hp, int S, int J,
                            const std::vector<int>& n, int H, Rng& rng);

// Default initialization: shared features from the prior (unit local
// precisions, prior-mean increments), all weights 1, noise at its prior mean.
ModelState make_prior_init(const DistanceDataset& data, const Hyperparameters& hp,
                           Rng& rng);

ChainOutput run_chain(const DistanceDataset& data, const Hyperparameters& hp,
                      const ModelState& init, const Schedule& sched,
                      std::uint64_t seed);

// Initializes via make_prior_init (or `init` when given) and runs one chain.
ChainOutput run_chain(const DistanceDataset& data, const Hyperparameters& hp,
                      const Schedule& sched, std::uint64_t seed,
                      const std::optional<ModelState>& init = std::nullopt);

// K chains with seeds derive_seed(root_seed, 1..K); OpenMP across chains when
// `parallel`. Results are identical either way.
std::vector<ChainOutput> run_chains(const DistanceDataset& data,
                                    const Hyperparameters& hp, const Schedule& sched,
                                    int n_chains, std::uint64_t root_seed,
                                    const std::optional<ModelState>& init = std::nullopt,
                                    bool parallel = true);

}  // namespace mixmds::sampler
