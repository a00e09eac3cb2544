#include "mixmds/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mixmds::sampler {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPosInf = std::numeric_limits<double>::infinity();

double log_diff(double lp_new, double lp_cur) {
  if (lp_new == kNegInf) return kNegInf;
  if (lp_cur == kNegInf) return kPosInf;
  return lp_new - lp_cur;
}

double gamma_term(double d, double delta, double sigma2) {
  if (delta <= model::kDistanceFloor) return kNegInf;
  return gamma_logpdf(d, delta * delta / sigma2, delta / sigma2);
}

bool mh_accept(double log_ratio, Rng& rng) {
  return std::log(rng.uniform()) < log_ratio;
}

// sum over h' != h of w_ind^2 * (eta_s - eta_r)^2 for one subject
double pair_base(const ModelState& st, int j, int i, int s, int r, int skip_h) {
  double base = 0.0;
  for (int h = 0; h < st.H; ++h) {
    if (h == skip_h) continue;
    const double w = st.w_ind[j](i, h);
    const double diff = st.eta(s, h) - st.eta(r, h);
    base += w * w * diff * diff;
  }
  return base;
}

}  // namespace

void Schedule::validate() const {
  if (n_iter <= 0 || burn_in < 0 || thin <= 0) {
    throw ValidationError("Schedule: n_iter, thin must be > 0 and burn_in >= 0");
  }
  if (burn_in >= n_iter) throw ValidationError("Schedule: burn_in must be < n_iter");
}

ProposalAdaptState ProposalAdaptState::make(int S, int J, const std::vector<int>& n,
                                            int H_max, const Hyperparameters& hp) {
  ProposalAdaptState a;
  a.batch_size = hp.adapt_batch;
  a.target_accept = hp.target_accept;
  const double ls = std::log(hp.proposal_scale_init);
  a.eta.assign(S, std::vector<BlockAdapt>(H_max));
  for (auto& row : a.eta) {
    for (auto& b : row) b.log_scale = ls;
  }
  a.sigma2.assign(J, BlockAdapt{});
  a.w_group.assign(J, BlockAdapt{});
  for (auto& b : a.sigma2) b.log_scale = ls;
  for (auto& b : a.w_group) b.log_scale = ls;
  a.w_ind.resize(J);
  for (int j = 0; j < J; ++j) {
    a.w_ind[j].assign(n[j], std::vector<BlockAdapt>(H_max));
    for (auto& row : a.w_ind[j]) {
      for (auto& b : row) b.log_scale = ls;
    }
  }
  return a;
}

void ProposalAdaptState::record(BlockAdapt& block, bool accepted) {
  block.attempts += 1;
  block.accepts += accepted ? 1 : 0;
  if (frozen) return;
  block.batch_attempts += 1;
  block.batch_accepts += accepted ? 1 : 0;
  if (block.batch_attempts >= batch_size) {
    block.batches += 1;
    const double rate =
        static_cast<double>(block.batch_accepts) / block.batch_attempts;
    const double step =
        std::min(0.01, 1.0 / std::sqrt(static_cast<double>(block.batches)));
    block.log_scale += rate > target_accept ? step : -step;
    block.batch_attempts = 0;
    block.batch_accepts = 0;
  }
}

void ProposalAdaptState::freeze_and_reset() {
  frozen = true;
  auto reset = [](BlockAdapt& b) {
    b.accepts = 0;
    b.attempts = 0;
    b.batch_accepts = 0;
    b.batch_attempts = 0;
  };
  for (auto& row : eta) {
    for (auto& b : row) reset(b);
  }
  for (auto& b : sigma2) reset(b);
  for (auto& b : w_group) reset(b);
  for (auto& g : w_ind) {
    for (auto& row : g) {
      for (auto& b : row) reset(b);
    }
  }
}

// --- conjugate conditionals --------------------------------------------------

namespace {

// rate term 1 + 1/2 * sum_{l>=h} tau_l^{(h)} sum_s phi_{s,l} eta_{s,l}^2,
// where tau_l^{(h)} is the cumulative product of increments skipping index h.
double mgp_rate_excluding(const ModelState& st, int h) {
  double rate = 1.0;
  double prod = 1.0;
  for (int l = 0; l < st.H; ++l) {
    if (l != h) prod *= st.mgp_delta[l];
    if (l >= h) {
      double quad = 0.0;
      for (int s = 0; s < st.S(); ++s) {
        quad += st.phi(s, l) * st.eta(s, l) * st.eta(s, l);
      }
      rate += 0.5 * prod * quad;
    }
  }
  return rate;
}

}  // namespace

GammaShapeRate delta1_conditional(const ModelState& state, const Hyperparameters& hp) {
  const double shape = hp.a1 + 0.5 * state.S() * state.H;
  return {shape, mgp_rate_excluding(state, 0)};
}

GammaShapeRate deltah_conditional(const ModelState& state, const Hyperparameters& hp,
                                  int h) {
  if (h < 1 || h >= state.H) {
    throw std::invalid_argument("deltah_conditional: need 1 <= h < H");
  }
  const double shape = hp.a2 + 0.5 * state.S() * (state.H - h);
  return {shape, mgp_rate_excluding(state, h)};
}

GammaShapeRate phi_conditional(const ModelState& state, const Hyperparameters& hp,
                               int s, int h) {
  const Eigen::VectorXd tau = model::mgp_tau(state.mgp_delta);
  const double e = state.eta(s, h);
  return {0.5 * (hp.nu + 1.0), 0.5 * (hp.nu + tau[h] * e * e)};
}

void step_mgp_delta1(ModelState& state, const Hyperparameters& hp, Rng& rng) {
  const GammaShapeRate g = delta1_conditional(state, hp);
  state.mgp_delta[0] = rng.gamma(g.shape, g.rate);
}

void step_mgp_deltah(ModelState& state, const Hyperparameters& hp, int h, Rng& rng) {
  const GammaShapeRate g = deltah_conditional(state, hp, h);
  state.mgp_delta[h] = rng.gamma(g.shape, g.rate);
}

void step_phi(ModelState& state, const Hyperparameters& hp, int s, int h, Rng& rng) {
  const GammaShapeRate g = phi_conditional(state, hp, s, h);
  state.phi(s, h) = rng.gamma(g.shape, g.rate);
}

// --- Metropolis blocks -------------------------------------------------------

double posterior_delta_eta(const ModelState& state, const DistanceDataset* data,
                           const Hyperparameters& /*hp*/, int s, int h,
                           double proposed) {
  const Eigen::VectorXd tau = model::mgp_tau(state.mgp_delta);
  const double sd = 1.0 / std::sqrt(state.phi(s, h) * tau[h]);
  double lp_new = normal_logpdf(proposed, 0.0, sd);
  double lp_cur = normal_logpdf(state.eta(s, h), 0.0, sd);
  if (data != nullptr) {
    const double cur = state.eta(s, h);
    for (int j = 0; j < data->J; ++j) {
      const double sigma2 = state.sigma2_eps[j];
      const double wg = state.w_group[j];
      for (int i = 0; i < data->n[j]; ++i) {
        const double wh = state.w_ind[j](i, h);
        for (int r = 0; r < data->S; ++r) {
          if (r == s) continue;
          const double base = pair_base(state, j, i, s, r, h);
          const double dcur = cur - state.eta(r, h);
          const double dnew = proposed - state.eta(r, h);
          const double delta_cur = wg * std::sqrt(base + wh * wh * dcur * dcur);
          const double delta_new = wg * std::sqrt(base + wh * wh * dnew * dnew);
          const double dval = data->value(j, i, s, r);
          lp_cur += gamma_term(dval, delta_cur, sigma2);
          lp_new += gamma_term(dval, delta_new, sigma2);
          if (lp_new == kNegInf) return log_diff(lp_new, lp_cur);
        }
      }
    }
  }
  return log_diff(lp_new, lp_cur);
}

double posterior_delta_sigma2(const ModelState& state, const DistanceDataset* data,
                              const Hyperparameters& hp, int j, double proposed) {
  const InvGammaShapeScale ig = invgamma_mean_var_to_shape_scale(
      hp.sigma2_prior_mean[j], hp.sigma2_prior_var[j]);
  double lp_new = invgamma_logpdf(proposed, ig.shape, ig.scale);
  double lp_cur = invgamma_logpdf(state.sigma2_eps[j], ig.shape, ig.scale);
  if (data != nullptr && proposed > 0.0) {
    for (int i = 0; i < data->n[j]; ++i) {
      for (int s = 1; s < data->S; ++s) {
        for (int r = 0; r < s; ++r) {
          const double delta = model::latent_distance(state, j, i, s, r);
          const double dval = data->value(j, i, s, r);
          lp_cur += gamma_term(dval, delta, state.sigma2_eps[j]);
          lp_new += gamma_term(dval, delta, proposed);
        }
      }
    }
  }
  return log_diff(lp_new, lp_cur);
}

double posterior_delta_w_ind(const ModelState& state, const DistanceDataset* data,
                             const Hyperparameters& hp, int j, int i, int h,
                             double proposed) {
  double lp_new = weight_logpdf(proposed, hp.a_w, hp.b_w, hp.weight_prior);
  double lp_cur =
      weight_logpdf(state.w_ind[j](i, h), hp.a_w, hp.b_w, hp.weight_prior);
  if (data != nullptr && proposed > 0.0) {
    const double sigma2 = state.sigma2_eps[j];
    const double wg = state.w_group[j];
    const double wcur = state.w_ind[j](i, h);
    for (int s = 1; s < data->S; ++s) {
      for (int r = 0; r < s; ++r) {
        const double base = pair_base(state, j, i, s, r, h);
        const double diff = state.eta(s, h) - state.eta(r, h);
        const double d2 = diff * diff;
        const double delta_cur = wg * std::sqrt(base + wcur * wcur * d2);
        const double delta_new = wg * std::sqrt(base + proposed * proposed * d2);
        const double dval = data->value(j, i, s, r);
        lp_cur += gamma_term(dval, delta_cur, sigma2);
        lp_new += gamma_term(dval, delta_new, sigma2);
        if (lp_new == kNegInf) return log_diff(lp_new, lp_cur);
      }
    }
  }
  return log_diff(lp_new, lp_cur);
}

double posterior_delta_w_group(const ModelState& state, const DistanceDataset* data,
                               const Hyperparameters& hp, int j, double proposed) {
  double lp_new = weight_logpdf(proposed, hp.a_w, hp.b_w, hp.weight_prior);
  double lp_cur = weight_logpdf(state.w_group[j], hp.a_w, hp.b_w, hp.weight_prior);
  if (data != nullptr && proposed > 0.0) {
    const double sigma2 = state.sigma2_eps[j];
    const double scale = proposed / state.w_group[j];
    for (int i = 0; i < data->n[j]; ++i) {
      for (int s = 1; s < data->S; ++s) {
        for (int r = 0; r < s; ++r) {
          const double delta_cur = model::latent_distance(state, j, i, s, r);
          const double delta_new = scale * delta_cur;
          const double dval = data->value(j, i, s, r);
          lp_cur += gamma_term(dval, delta_cur, sigma2);
          lp_new += gamma_term(dval, delta_new, sigma2);
          if (lp_new == kNegInf) return log_diff(lp_new, lp_cur);
        }
      }
    }
  }
  return log_diff(lp_new, lp_cur);
}

void step_eta(ModelState& state, const Hyperparameters& hp, const DistanceDataset* data,
              ProposalAdaptState& adapt, int s, int h, Rng& rng) {
  BlockAdapt& block = adapt.eta[s][h];
  const double proposed = state.eta(s, h) + std::exp(block.log_scale) * rng.normal();
  const double log_ratio = posterior_delta_eta(state, data, hp, s, h, proposed);
  const bool accepted = mh_accept(log_ratio, rng);
  if (accepted) state.eta(s, h) = proposed;
  adapt.record(block, accepted);
}

void step_sigma2(ModelState& state, const Hyperparameters& hp,
                 const DistanceDataset* data, ProposalAdaptState& adapt, int j,
                 Rng& rng) {
  BlockAdapt& block = adapt.sigma2[j];
  const double cur = state.sigma2_eps[j];
  const double proposed =
      cur * std::exp(std::exp(block.log_scale) * rng.normal());
  // log-scale proposal: Jacobian contributes log(proposed / cur)
  const double log_ratio = posterior_delta_sigma2(state, data, hp, j, proposed) +
                           std::log(proposed / cur);
  const bool accepted = mh_accept(log_ratio, rng);
  if (accepted) state.sigma2_eps[j] = proposed;
  adapt.record(block, accepted);
}

void step_w_individual(ModelState& state, const Hyperparameters& hp,
                       const DistanceDataset* data, ProposalAdaptState& adapt, int j,
                       int i, int h, Rng& rng) {
  BlockAdapt& block = adapt.w_ind[j][i][h];
  const double cur = state.w_ind[j](i, h);
  const double proposed = cur * std::exp(std::exp(block.log_scale) * rng.normal());
  const double log_ratio = posterior_delta_w_ind(state, data, hp, j, i, h, proposed) +
                           std::log(proposed / cur);
  const bool accepted = mh_accept(log_ratio, rng);
  if (accepted) state.w_ind[j](i, h) = proposed;
  adapt.record(block, accepted);
}

void step_w_group(ModelState& state, const Hyperparameters& hp,
                  const DistanceDataset* data, ProposalAdaptState& adapt, int j,
                  Rng& rng) {
  BlockAdapt& block = adapt.w_group[j];
  const double cur = state.w_group[j];
  const double proposed = cur * std::exp(std::exp(block.log_scale) * rng.normal());
  const double log_ratio = posterior_delta_w_group(state, data, hp, j, proposed) +
                           std::log(proposed / cur);
  const bool accepted = mh_accept(log_ratio, rng);
  if (accepted) state.w_group[j] = proposed;
  adapt.record(block, accepted);
}

// --- dimension adaptation ----------------------------------------------------

double reconstruction_error(const ModelState& state, const DistanceDataset& data,
                            ErrorNorm norm) {
  double sum_ratio = 0.0;
  double sum_num = 0.0;
  double sum_den = 0.0;
  int count = 0;
  for (int j = 0; j < data.J; ++j) {
    for (int i = 0; i < data.n[j]; ++i) {
      double num = 0.0;
      double den = 0.0;
      for (int s = 1; s < data.S; ++s) {
        for (int r = 0; r < s; ++r) {
          const double delta = model::latent_distance(state, j, i, s, r);
          const double dval = data.value(j, i, s, r);
          num += (dval - delta) * (dval - delta);
          den += dval * dval;
        }
      }
      if (!(den > 0.0)) {
        throw std::domain_error("reconstruction_error: zero observed matrix");
      }
      sum_ratio += std::sqrt(num) / std::sqrt(den);
      sum_num += std::sqrt(num);
      sum_den += std::sqrt(den);
      ++count;
    }
  }
  if (norm == ErrorNorm::PerSubjectRatio) return sum_ratio / count;
  return sum_num / sum_den;
}

void adapt_dimension(ModelState& state, const Hyperparameters& hp, double D, long t,
                     const std::vector<int>& n, Rng& rng) {
  const double p = std::exp(hp.adapt_alpha0 + hp.adapt_alpha1 * static_cast<double>(t));
  if (rng.uniform() >= p) return;

  const int S = state.S();
  const int J = state.J();
  if (D > hp.dimension_error_threshold && state.H < hp.H_max) {
    // birth: draw the new column from the prior (increment, locals, feature
    // values, then individual weight columns, in this fixed order)
    const int H = state.H;
    state.mgp_delta.conservativeResize(H + 1);
    state.mgp_delta[H] = rng.gamma(hp.a2, 1.0);
    const Eigen::VectorXd tau = model::mgp_tau(state.mgp_delta);
    state.phi.conservativeResize(S, H + 1);
    for (int s = 0; s < S; ++s) {
      state.phi(s, H) = rng.gamma(hp.nu / 2.0, hp.nu / 2.0);
    }
    state.eta.conservativeResize(S, H + 1);
    for (int s = 0; s < S; ++s) {
      state.eta(s, H) = rng.normal(0.0, 1.0 / std::sqrt(state.phi(s, H) * tau[H]));
    }
    for (int j = 0; j < J; ++j) {
      state.w_ind[j].conservativeResize(n[j], H + 1);
      for (int i = 0; i < n[j]; ++i) {
        state.w_ind[j](i, H) = draw_weight(rng, hp.a_w, hp.b_w, hp.weight_prior);
      }
    }
    state.H = H + 1;
  } else if (D <= hp.dimension_error_threshold && state.H > 1) {
    // death: retain the non-redundant leading features, drop the last column
    const int H = state.H - 1;
    state.mgp_delta.conservativeResize(H);
    state.phi.conservativeResize(Eigen::NoChange, H);
    state.eta.conservativeResize(Eigen::NoChange, H);
    for (int j = 0; j < J; ++j) state.w_ind[j].conservativeResize(Eigen::NoChange, H);
    state.H = H;
  }
}

void sweep(ModelState& state, const Hyperparameters& hp, const DistanceDataset* data,
           ProposalAdaptState& adapt, Rng& rng) {
  step_mgp_delta1(state, hp, rng);
  for (int h = 1; h < state.H; ++h) step_mgp_deltah(state, hp, h, rng);
  for (int s = 0; s < state.S(); ++s) {
    for (int h = 0; h < state.H; ++h) step_phi(state, hp, s, h, rng);
  }
  for (int s = 0; s < state.S(); ++s) {
    for (int h = 0; h < state.H; ++h) step_eta(state, hp, data, adapt, s, h, rng);
  }
  for (int j = 0; j < state.J(); ++j) step_sigma2(state, hp, data, adapt, j, rng);
  for (int j = 0; j < state.J(); ++j) {
    for (int i = 0; i < state.w_ind[j].rows(); ++i) {
      for (int h = 0; h < state.H; ++h) {
        step_w_individual(state, hp, data, adapt, j, i, h, rng);
      }
    }
  }
  for (int j = 0; j < state.J(); ++j) step_w_group(state, hp, data, adapt, j, rng);
}

ModelState draw_prior_state(const Hyperparameters& hp, int S, int J,
                            const std::vector<int>& n, int H, Rng& rng) {
  ModelState st;
  st.H = H;
  st.mgp_delta.resize(H);
  st.mgp_delta[0] = rng.gamma(hp.a1, 1.0);
  for (int h = 1; h < H; ++h) st.mgp_delta[h] = rng.gamma(hp.a2, 1.0);
  const Eigen::VectorXd tau = model::mgp_tau(st.mgp_delta);
  st.phi.resize(S, H);
  for (int s = 0; s < S; ++s) {
    for (int h = 0; h < H; ++h) st.phi(s, h) = rng.gamma(hp.nu / 2.0, hp.nu / 2.0);
  }
  st.eta.resize(S, H);
  for (int s = 0; s < S; ++s) {
    for (int h = 0; h < H; ++h) {
      st.eta(s, h) = rng.normal(0.0, 1.0 / std::sqrt(st.phi(s, h) * tau[h]));
    }
  }
  st.w_group.resize(J);
  for (int j = 0; j < J; ++j) {
    st.w_group[j] = draw_weight(rng, hp.a_w, hp.b_w, hp.weight_prior);
  }
  st.w_ind.resize(J);
  for (int j = 0; j < J; ++j) {
    st.w_ind[j].resize(n[j], H);
    for (int i = 0; i < n[j]; ++i) {
      for (int h = 0; h < H; ++h) {
        st.w_ind[j](i, h) = draw_weight(rng, hp.a_w, hp.b_w, hp.weight_prior);
      }
    }
  }
  st.sigma2_eps.resize(J);
  for (int j = 0; j < J; ++j) {
    const InvGammaShapeScale ig = invgamma_mean_var_to_shape_scale(
        hp.sigma2_prior_mean[j], hp.sigma2_prior_var[j]);
    st.sigma2_eps[j] = rng.inv_gamma(ig.shape, ig.scale);
  }
  return st;
}

ModelState make_prior_init(const DistanceDataset& data, const Hyperparameters& hp,
                           Rng& rng) {
  ModelState st;
  const int S = data.S;
  const int J = data.J;
  const int H = hp.H_init;
  st.H = H;
  st.mgp_delta.resize(H);
  st.mgp_delta[0] = hp.a1;  // prior means, deterministic
  for (int h = 1; h < H; ++h) st.mgp_delta[h] = hp.a2;
  st.phi = Eigen::MatrixXd::Ones(S, H);
  const Eigen::VectorXd tau = model::mgp_tau(st.mgp_delta);
  st.eta.resize(S, H);
  for (int s = 0; s < S; ++s) {
    for (int h = 0; h < H; ++h) {
      st.eta(s, h) = rng.normal(0.0, 1.0 / std::sqrt(tau[h]));
    }
  }
  st.w_group = Eigen::VectorXd::Ones(J);
  st.w_ind.resize(J);
  for (int j = 0; j < J; ++j) st.w_ind[j] = Eigen::MatrixXd::Ones(data.n[j], H);
  st.sigma2_eps.resize(J);
  for (int j = 0; j < J; ++j) st.sigma2_eps[j] = hp.sigma2_prior_mean[j];
  return st;
}

ChainOutput run_chain(const DistanceDataset& data, const Hyperparameters& hp,
                      const ModelState& init, const Schedule& sched,
                      std::uint64_t seed) {
  sched.validate();
  if (!hp.finalized()) {
    throw ValidationError("run_chain: hyperparameters must be finalized first");
  }
  init.validate(data.S, data.J, data.n);

  Rng rng(seed);
  ModelState state = init;
  const long freeze = sched.resolved_freeze();
  const DistanceDataset* lik_data = sched.prior_only ? nullptr : &data;

  ChainOutput out;
  out.adapt = ProposalAdaptState::make(data.S, data.J, data.n, hp.H_max, hp);
  out.H_trace.reserve(sched.n_iter);
  out.D_trace.reserve(sched.n_iter);
  out.meta = {seed,   sched.n_iter, sched.burn_in, sched.thin,
              freeze, state.H,      sched.prior_only};

  bool frozen = freeze <= 0;
  if (frozen) out.adapt.freeze_and_reset();

  for (long t = 0; t < sched.n_iter; ++t) {
    if (!frozen && t >= freeze) {
      // fix H at the (lower) median of the trace so far, then stop all
      // dimension moves and proposal adaptation
      std::vector<int> hs(out.H_trace.begin(), out.H_trace.end());
      std::nth_element(hs.begin(), hs.begin() + (hs.size() - 1) / 2, hs.end());
      const int H_target = hs[(hs.size() - 1) / 2];
      while (state.H > H_target) {
        adapt_dimension(state, hp, 0.0, 0, data.n, rng);  // p(0)=1 with D=0: death
      }
      while (state.H < H_target) {
        adapt_dimension(state, hp, kPosInf, 0, data.n, rng);  // forced birth
      }
      out.adapt.freeze_and_reset();
      frozen = true;
    }

    out.H_trace.push_back(state.H);
    sweep(state, hp, lik_data, out.adapt, rng);
    const double D = reconstruction_error(state, data, hp.error_norm);
    out.D_trace.push_back(D);
    if (!frozen) adapt_dimension(state, hp, D, t, data.n, rng);

    if (t >= sched.burn_in && (t - sched.burn_in) % sched.thin == 0) {
      out.draws.push_back(state);
    }
  }
  out.meta.frozen_H = state.H;
  return out;
}

ChainOutput run_chain(const DistanceDataset& data, const Hyperparameters& hp,
                      const Schedule& sched, std::uint64_t seed,
                      const std::optional<ModelState>& init) {
  if (init.has_value()) return run_chain(data, hp, *init, sched, seed);
  sched.validate();
  if (!hp.finalized()) {
    throw ValidationError("run_chain: hyperparameters must be finalized first");
  }
  Rng rng(seed);
  const ModelState start = make_prior_init(data, hp, rng);
  // chain continues from the same stream so initialization stays seed-coupled
  return run_chain(data, hp, start, sched, rng.next_u64());
}

std::vector<ChainOutput> run_chains(const DistanceDataset& data,
                                    const Hyperparameters& hp, const Schedule& sched,
                                    int n_chains, std::uint64_t root_seed,
                                    const std::optional<ModelState>& init,
                                    bool parallel) {
  if (n_chains < 1) throw ValidationError("run_chains: need at least one chain");
  std::vector<ChainOutput> out(n_chains);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
  for (int k = 0; k < n_chains; ++k) {
    out[k] = run_chain(data, hp, sched, derive_seed(root_seed, k + 1), init);
  }
  return out;
}

}  // namespace mixmds::sampler
