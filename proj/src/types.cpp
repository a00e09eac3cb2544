#include "mixmds/types.hpp"

#include <cmath>
#include <sstream>

namespace mixmds {

int DistanceDataset::n_total() const {
  int total = 0;
  for (int nj : n) total += nj;
  return total;
}

int DistanceDataset::pair_index(int s, int r) {
  if (r > s) std::swap(s, r);
  if (r == s) throw std::invalid_argument("pair_index: diagonal pair requested");
  return s * (s - 1) / 2 + r;
}

void DistanceDataset::validate() const {
  std::ostringstream errs;
  if (S < 2) errs << "S must be >= 2 (got " << S << ")\n";
  if (J < 1) errs << "J must be >= 1 (got " << J << ")\n";
  if (static_cast<int>(n.size()) != J) errs << "n must have one entry per group\n";
  if (static_cast<int>(d.size()) != J) errs << "d must have one block per group\n";
  const int P = n_pairs();
  for (int j = 0; j < J && j < static_cast<int>(d.size()); ++j) {
    if (j < static_cast<int>(n.size()) && n[j] < 1) {
      errs << "group " << j + 1 << ": subject count must be >= 1\n";
    }
    if (d[j].rows() != n[j] || d[j].cols() != P) {
      errs << "group " << j + 1 << ": distance block must be " << n[j] << "x" << P
           << " (got " << d[j].rows() << "x" << d[j].cols() << ")\n";
      continue;
    }
    for (int i = 0; i < n[j]; ++i) {
      for (int p = 0; p < P; ++p) {
        const double v = d[j](i, p);
        if (!std::isfinite(v) || !(v > 0.0)) {
          errs << "group " << j + 1 << " subject " << i + 1 << " pair " << p + 1
               << ": distance must be finite and > 0 (got " << v << ")\n";
        }
      }
    }
  }
  const std::string msg = errs.str();
  if (!msg.empty()) throw ValidationError("invalid distance dataset:\n" + msg);
}

void ModelState::validate(int S_, int J_, const std::vector<int>& n) const {
  if (H < 1) throw ValidationError("ModelState: H must be >= 1");
  auto shape = [&](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("ModelState: bad shape for ") + what);
  };
  shape(eta.rows() == S_ && eta.cols() == H, "eta");
  shape(phi.rows() == S_ && phi.cols() == H, "phi");
  shape(static_cast<int>(mgp_delta.size()) == H, "mgp_delta");
  shape(static_cast<int>(w_group.size()) == J_, "w_group");
  shape(static_cast<int>(sigma2_eps.size()) == J_, "sigma2_eps");
  shape(static_cast<int>(w_ind.size()) == J_, "w_ind");
  for (int j = 0; j < J_; ++j) {
    shape(w_ind[j].rows() == n[j] && w_ind[j].cols() == H, "w_ind block");
  }
  auto positive = [](const auto& m, const char* what) {
    if (!(m.array() > 0.0).all() || !m.allFinite()) {
      throw ValidationError(std::string("ModelState: ") + what +
                            " must be finite and strictly positive");
    }
  };
  positive(phi, "phi");
  positive(mgp_delta, "mgp_delta");
  positive(w_group, "w_group");
  positive(sigma2_eps, "sigma2_eps");
  for (const auto& w : w_ind) positive(w, "w_ind");
  if (!eta.allFinite()) throw ValidationError("ModelState: eta must be finite");
}

void Hyperparameters::finalize(const DistanceDataset& data) {
  if (a_w <= 0.0 || b_w <= 0.0) {
    const WeightHyper wh = solve_weight_hyperparams(weight_mean, weight_var);
    a_w = wh.a_w;
    b_w = wh.b_w;
  }
  if (H_max <= 0) H_max = data.S - 1;
  if (sigma2_prior_mean.empty()) {
    sigma2_prior_mean.resize(data.J);
    sigma2_prior_var.resize(data.J);
    for (int j = 0; j < data.J; ++j) {
      const auto& block = data.d[j];
      const double mean = block.mean();
      const double count = static_cast<double>(block.size());
      double ss = (block.array() - mean).square().sum();
      const double var = count > 1 ? ss / (count - 1.0) : 1.0;
      sigma2_prior_mean[j] = var > 0.0 ? var : 1.0;
      sigma2_prior_var[j] = 10.0 * sigma2_prior_mean[j] * sigma2_prior_mean[j];
    }
  }
  validate(data.J);
  if (H_init > H_max) {
    throw ValidationError("Hyperparameters: H_init must be <= H_max");
  }
  if (H_max >= data.S) {
    throw ValidationError("Hyperparameters: H_max must be < S");
  }
}

void Hyperparameters::validate(int J_) const {
  auto pos = [](double v, const char* what) {
    if (!(v > 0.0)) {
      throw ValidationError(std::string("Hyperparameters: ") + what +
                            " must be > 0");
    }
  };
  pos(a1, "a1");
  pos(a2, "a2");
  pos(nu, "nu");
  pos(weight_mean, "weight_mean");
  pos(weight_var, "weight_var");
  pos(a_w, "a_w");
  pos(b_w, "b_w");
  pos(dimension_error_threshold, "dimension_error_threshold");
  pos(proposal_scale_init, "proposal_scale_init");
  pos(target_accept, "target_accept");
  if (adapt_alpha0 < 0.0) throw ValidationError("Hyperparameters: alpha0 must be >= 0");
  if (!(adapt_alpha1 < 0.0)) throw ValidationError("Hyperparameters: alpha1 must be < 0");
  if (H_init < 1) throw ValidationError("Hyperparameters: H_init must be >= 1");
  if (H_max < 1) throw ValidationError("Hyperparameters: H_max must be >= 1");
  if (adapt_batch < 1) throw ValidationError("Hyperparameters: adapt_batch must be >= 1");
  if (static_cast<int>(sigma2_prior_mean.size()) != J_ ||
      static_cast<int>(sigma2_prior_var.size()) != J_) {
    throw ValidationError("Hyperparameters: noise prior moments must have one entry per group");
  }
  for (int j = 0; j < J_; ++j) {
    pos(sigma2_prior_mean[j], "sigma2_prior_mean");
    pos(sigma2_prior_var[j], "sigma2_prior_var");
  }
}

}  // namespace mixmds
