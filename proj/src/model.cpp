#include "mixmds/model.hpp"

#include <cmath>
#include <limits>

namespace mixmds::model {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

Eigen::VectorXd mgp_tau(const Eigen::VectorXd& mgp_delta) {
  Eigen::VectorXd tau(mgp_delta.size());
  double prod = 1.0;
  for (Eigen::Index h = 0; h < mgp_delta.size(); ++h) {
    if (!(mgp_delta[h] > 0.0)) {
      throw std::domain_error("mgp_tau: increments must be positive");
    }
    prod *= mgp_delta[h];
    tau[h] = prod;
  }
  return tau;
}

std::vector<std::vector<Eigen::MatrixXd>> individual_features(const ModelState& state) {
  std::vector<std::vector<Eigen::MatrixXd>> out(state.J());
  for (int j = 0; j < state.J(); ++j) {
    const int nj = static_cast<int>(state.w_ind[j].rows());
    out[j].reserve(nj);
    for (int i = 0; i < nj; ++i) {
      Eigen::MatrixXd feats = state.eta;
      for (int h = 0; h < state.H; ++h) {
        feats.col(h) *= state.w_ind[j](i, h) * state.w_group[j];
      }
      out[j].push_back(std::move(feats));
    }
  }
  return out;
}

double latent_distance(const ModelState& state, int j, int i, int s, int r) {
  if (s == r) {
    throw std::invalid_argument("latent_distance: diagonal pair requested");
  }
  double sum = 0.0;
  for (int h = 0; h < state.H; ++h) {
    const double w = state.w_ind[j](i, h);
    const double diff = state.eta(s, h) - state.eta(r, h);
    sum += w * w * diff * diff;
  }
  return state.w_group[j] * std::sqrt(sum);
}

double log_likelihood(const ModelState& state, const DistanceDataset& data) {
  double total = 0.0;
  for (int j = 0; j < data.J; ++j) {
    const double sigma2 = state.sigma2_eps[j];
    for (int i = 0; i < data.n[j]; ++i) {
      for (int s = 1; s < data.S; ++s) {
        for (int r = 0; r < s; ++r) {
          const double delta = latent_distance(state, j, i, s, r);
          if (delta <= kDistanceFloor) return kNegInf;
          const double shape = delta * delta / sigma2;
          const double rate = delta / sigma2;
          total += gamma_logpdf(data.value(j, i, s, r), shape, rate);
        }
      }
    }
  }
  return total;
}

double log_prior(const ModelState& state, const Hyperparameters& hp) {
  for (int h = 0; h < state.H; ++h) {
    if (!(state.mgp_delta[h] > 0.0)) return kNegInf;
  }
  if (!(state.phi.array() > 0.0).all()) return kNegInf;
  if (!(state.w_group.array() > 0.0).all()) return kNegInf;
  if (!(state.sigma2_eps.array() > 0.0).all()) return kNegInf;
  for (const auto& w : state.w_ind) {
    if (!(w.array() > 0.0).all()) return kNegInf;
  }

  const Eigen::VectorXd tau = mgp_tau(state.mgp_delta);
  double total = 0.0;

  // shared features and their local/global precisions
  for (int s = 0; s < state.S(); ++s) {
    for (int h = 0; h < state.H; ++h) {
      const double prec = state.phi(s, h) * tau[h];
      total += normal_logpdf(state.eta(s, h), 0.0, 1.0 / std::sqrt(prec));
      total += gamma_logpdf(state.phi(s, h), hp.nu / 2.0, hp.nu / 2.0);
    }
  }

  // MGP increments
  for (int h = 0; h < state.H; ++h) {
    const double a_h = h == 0 ? hp.a1 : hp.a2;
    total += gamma_logpdf(state.mgp_delta[h], a_h, 1.0);
  }

  // weights, both levels
  for (int j = 0; j < state.J(); ++j) {
    total += weight_logpdf(state.w_group[j], hp.a_w, hp.b_w, hp.weight_prior);
    for (int i = 0; i < state.w_ind[j].rows(); ++i) {
      for (int h = 0; h < state.H; ++h) {
        total += weight_logpdf(state.w_ind[j](i, h), hp.a_w, hp.b_w, hp.weight_prior);
      }
    }
  }

  // group noise variances
  for (int j = 0; j < state.J(); ++j) {
    const InvGammaShapeScale ig = invgamma_mean_var_to_shape_scale(
        hp.sigma2_prior_mean[j], hp.sigma2_prior_var[j]);
    total += invgamma_logpdf(state.sigma2_eps[j], ig.shape, ig.scale);
  }

  return total;
}

}  // namespace mixmds::model
