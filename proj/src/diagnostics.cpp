#include "mixmds/diagnostics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mixmds::diagnostics {

namespace {

constexpr double kPosInf = std::numeric_limits<double>::infinity();

void check_chains(size_t m, size_t n) {
  if (m < 2) throw ValidationError("diagnostics: need at least 2 chains");
  if (n < 10) throw ValidationError("diagnostics: need at least 10 draws per chain");
}

}  // namespace

double psrf(const std::vector<std::vector<double>>& chains) {
  const size_t m = chains.size();
  check_chains(m, m ? chains.front().size() : 0);
  const size_t n = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != n) throw ValidationError("psrf: chains must share a length");
  }

  double grand = 0.0;
  std::vector<double> means(m);
  std::vector<double> vars(m);
  for (size_t j = 0; j < m; ++j) {
    double mean = 0.0;
    for (double x : chains[j]) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : chains[j]) ss += (x - mean) * (x - mean);
    means[j] = mean;
    vars[j] = ss / (n - 1);
    grand += mean;
  }
  grand /= m;

  double W = 0.0;
  for (double v : vars) W += v;
  W /= m;
  double B_over_n = 0.0;
  for (double mu : means) B_over_n += (mu - grand) * (mu - grand);
  B_over_n /= (m - 1);

  if (W <= 0.0) return B_over_n > 0.0 ? kPosInf : 1.0;
  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  const double vhat = (nn - 1.0) / nn * W + (mm + 1.0) / mm * B_over_n;
  return std::max(0.99, std::sqrt(vhat / W));
}

double mpsrf(const std::vector<Eigen::MatrixXd>& chains) {
  const size_t m = chains.size();
  check_chains(m, m ? static_cast<size_t>(chains.front().rows()) : 0);
  const Eigen::Index n = chains.front().rows();
  const Eigen::Index dim = chains.front().cols();
  for (const auto& c : chains) {
    if (c.rows() != n || c.cols() != dim) {
      throw ValidationError("mpsrf: chains must share a shape");
    }
  }

  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd mean_per_chain(m, dim);
  for (size_t j = 0; j < m; ++j) {
    const Eigen::RowVectorXd mu = chains[j].colwise().mean();
    mean_per_chain.row(j) = mu;
    const Eigen::MatrixXd centered = chains[j].rowwise() - mu;
    W += centered.transpose() * centered / static_cast<double>(n - 1);
  }
  W /= static_cast<double>(m);
  const Eigen::RowVectorXd grand = mean_per_chain.colwise().mean();
  const Eigen::MatrixXd dev = mean_per_chain.rowwise() - grand;
  const Eigen::MatrixXd B_over_n = dev.transpose() * dev / static_cast<double>(m - 1);

  const Eigen::LLT<Eigen::MatrixXd> llt(W);
  if (llt.info() != Eigen::Success) return kPosInf;
  // largest eigenvalue of W^-1 B/n via the symmetric generalized problem
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(B_over_n, W,
                                                                   Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) return kPosInf;
  const double lambda1 = solver.eigenvalues().maxCoeff();
  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  return std::max(0.99, std::sqrt((nn - 1.0) / nn + (mm + 1.0) / mm * lambda1));
}

EssResult ess(const std::vector<double>& series) {
  const size_t n = series.size();
  if (n < 10) throw ValidationError("ess: need at least 10 draws");
  double mean = 0.0;
  for (double x : series) mean += x;
  mean /= n;
  double var0 = 0.0;
  for (double x : series) var0 += (x - mean) * (x - mean);
  var0 /= n;  // biased normalization, standard for ACF
  if (var0 <= 0.0) return {static_cast<double>(n), true};

  auto rho = [&](size_t k) {
    double acc = 0.0;
    for (size_t t = 0; t + k < n; ++t) acc += (series[t] - mean) * (series[t + k] - mean);
    return acc / (n * var0);
  };

  // Geyer: sum paired autocorrelations Gamma_m = rho_{2m} + rho_{2m+1} while
  // positive, enforcing monotone nonincreasing partial terms.
  double tau = 0.0;
  double prev = kPosInf;
  for (size_t m2 = 0; 2 * m2 + 1 < n; ++m2) {
    double gamma = rho(2 * m2) + rho(2 * m2 + 1);
    if (gamma <= 0.0) break;
    gamma = std::min(gamma, prev);
    prev = gamma;
    tau += 2.0 * gamma;
  }
  tau -= 1.0;  // Gamma_0 double counts rho_0 = 1
  tau = std::max(tau, 1e-12);
  const double out = std::min(static_cast<double>(n), n / tau);
  return {out, false};
}

namespace {

std::string delta_name(int j, int i, int s, int r) {
  return "delta[" + std::to_string(j + 1) + "," + std::to_string(i + 1) + "," +
         std::to_string(s + 1) + "," + std::to_string(r + 1) + "]";
}

}  // namespace

DiagnosticsReport diagnose(const std::vector<sampler::ChainOutput>& chains,
                           double psrf_threshold, bool parallel) {
  if (chains.size() < 2) {
    throw ValidationError("diagnose: need at least 2 chains");
  }
  const size_t n_draws = chains.front().draws.size();
  for (const auto& c : chains) {
    if (c.draws.size() != n_draws || n_draws < 10) {
      throw ValidationError("diagnose: chains must share >= 10 stored draws");
    }
  }
  const ModelState& first = chains.front().draws.front();
  const int S = first.S();
  const int J = first.J();
  std::vector<int> n;
  for (const auto& w : first.w_ind) n.push_back(static_cast<int>(w.rows()));

  struct Target {
    int j, i, s, r;
  };
  std::vector<Target> targets;
  for (int j = 0; j < J; ++j) {
    for (int i = 0; i < n[j]; ++i) {
      for (int s = 1; s < S; ++s) {
        for (int r = 0; r < s; ++r) targets.push_back({j, i, s, r});
      }
    }
  }
  const int n_delta = static_cast<int>(targets.size());
  const int m = static_cast<int>(chains.size());

  // per-chain series matrices for the distance vector (draws x quantities)
  std::vector<Eigen::MatrixXd> delta_mat(m);
  for (int c = 0; c < m; ++c) {
    delta_mat[c].resize(n_draws, n_delta);
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(static) collapse(2) if (parallel)
#endif
  for (int c = 0; c < m; ++c) {
    for (int q = 0; q < n_delta; ++q) {
      const Target& tg = targets[q];
      for (size_t t = 0; t < n_draws; ++t) {
        delta_mat[c](t, q) =
            model::latent_distance(chains[c].draws[t], tg.j, tg.i, tg.s, tg.r);
      }
    }
  }

  DiagnosticsReport report;
  report.psrf_threshold = psrf_threshold;
  report.quantities.resize(n_delta + J + 1);

#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (int q = 0; q < n_delta; ++q) {
    std::vector<std::vector<double>> per_chain(m);
    for (int c = 0; c < m; ++c) {
      per_chain[c].assign(delta_mat[c].col(q).data(),
                          delta_mat[c].col(q).data() + n_draws);
    }
    QuantityDiagnostic qd;
    const Target& tg = targets[q];
    qd.name = delta_name(tg.j, tg.i, tg.s, tg.r);
    qd.psrf = psrf(per_chain);
    double e = 0.0;
    bool zero = true;
    for (int c = 0; c < m; ++c) {
      const EssResult r = ess(per_chain[c]);
      e += r.ess;
      zero = zero && r.zero_variance;
    }
    qd.ess = e;
    qd.zero_variance = zero;
    report.quantities[q] = std::move(qd);
  }

  for (int j = 0; j < J; ++j) {
    std::vector<std::vector<double>> per_chain(m);
    for (int c = 0; c < m; ++c) {
      per_chain[c].resize(n_draws);
      for (size_t t = 0; t < n_draws; ++t) {
        per_chain[c][t] = chains[c].draws[t].sigma2_eps[j];
      }
    }
    QuantityDiagnostic qd;
    qd.name = "sigma2[" + std::to_string(j + 1) + "]";
    qd.psrf = psrf(per_chain);
    double e = 0.0;
    for (int c = 0; c < m; ++c) e += ess(per_chain[c]).ess;
    qd.ess = e;
    report.quantities[n_delta + j] = std::move(qd);
  }

  {
    std::vector<std::vector<double>> per_chain(m);
    for (int c = 0; c < m; ++c) {
      const auto& tr = chains[c].H_trace;
      const long b = chains[c].meta.burn_in;
      per_chain[c].assign(tr.begin() + b, tr.end());
    }
    QuantityDiagnostic qd;
    qd.name = "H";
    qd.psrf = psrf(per_chain);
    double e = 0.0;
    bool zero = true;
    for (int c = 0; c < m; ++c) {
      const EssResult r = ess(per_chain[c]);
      e += r.ess;
      zero = zero && r.zero_variance;
    }
    qd.ess = e;
    qd.zero_variance = zero;
    report.quantities[n_delta + J] = std::move(qd);
  }

  report.mpsrf_delta = mpsrf(delta_mat);
  for (const auto& q : report.quantities) {
    if (q.psrf > psrf_threshold) report.flags.push_back(q.name);
  }
  if (report.mpsrf_delta > psrf_threshold) {
    report.flags.push_back("mpsrf(delta)");
  }
  return report;
}

}  // namespace mixmds::diagnostics
