#include "mixmds/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mixmds::postprocess {

namespace {

// residual and lexicographic-encoded permutation, comparable as a pair
struct Candidate {
  double residual = std::numeric_limits<double>::infinity();
  SignedPerm perm;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.residual != b.residual) return a.residual < b.residual;
  return a.perm.encode() < b.perm.encode();
}

}  // namespace

SignedPerm SignedPerm::identity(int H) {
  SignedPerm p;
  p.src.resize(H);
  p.sign.assign(H, 1);
  std::iota(p.src.begin(), p.src.end(), 0);
  return p;
}

bool SignedPerm::is_identity() const {
  for (size_t k = 0; k < src.size(); ++k) {
    if (src[k] != static_cast<int>(k) || sign[k] != 1) return false;
  }
  return true;
}

std::vector<int> SignedPerm::encode() const {
  std::vector<int> code(src.size());
  for (size_t k = 0; k < src.size(); ++k) {
    code[k] = 2 * src[k] + (sign[k] < 0 ? 1 : 0);
  }
  return code;
}

Eigen::MatrixXd NormalizedDraw::eta_ind(int j, int i) const {
  Eigen::MatrixXd feats = eta_group[j];
  for (int h = 0; h < H(); ++h) {
    feats.col(h) *= w_group[j] * w_ind[j](i, h);
  }
  return feats;
}

double NormalizedDraw::latent_distance(int j, int i, int s, int r) const {
  double sum = 0.0;
  for (int h = 0; h < H(); ++h) {
    const double v = w_group[j] * w_ind[j](i, h) *
                     (eta_group[j](s, h) - eta_group[j](r, h));
    sum += v * v;
  }
  return std::sqrt(sum);
}

NormalizedDraw center_and_rescale(const ModelState& state, const std::vector<int>& n) {
  const int S = state.S();
  const int J = state.J();
  const int H = state.H;
  int n_total = 0;
  for (int nj : n) n_total += nj;

  // (1) center shared feature columns; pair differences are untouched
  Eigen::MatrixXd eta_c = state.eta;
  for (int h = 0; h < H; ++h) {
    eta_c.col(h).array() -= eta_c.col(h).mean();
  }

  // raw weight mass per (group, dimension): s_{j,h} = w_j * sum_i w_ind
  Eigen::MatrixXd s_jh(J, H);
  for (int j = 0; j < J; ++j) {
    for (int h = 0; h < H; ++h) {
      s_jh(j, h) = state.w_group[j] * state.w_ind[j].col(h).sum();
    }
  }
  const double W = state.w_group.sum();
  if (!(W > 0.0) || !std::isfinite(W) || !(s_jh.array() > 0.0).all() ||
      !s_jh.allFinite()) {
    throw DegenerateDraw("center_and_rescale: nonpositive weight sums");
  }

  NormalizedDraw out;
  // (2) group weights sum to J; individual weights absorb the rest so that
  //     sum_i w'_j * w'_ind[j](i,h) = n_j for every (j, h)
  out.w_group = state.w_group * (static_cast<double>(J) / W);
  out.w_ind.resize(J);
  for (int j = 0; j < J; ++j) {
    out.w_ind[j].resize(n[j], H);
    for (int h = 0; h < H; ++h) {
      const double factor =
          state.w_group[j] * n[j] / (s_jh(j, h) * out.w_group[j]);
      out.w_ind[j].col(h) = state.w_ind[j].col(h) * factor;
    }
  }
  // (3) group features are the group means of the individual features and the
  //     shared features their grand mean; both stay centered per column
  out.eta_group.resize(J);
  for (int j = 0; j < J; ++j) {
    out.eta_group[j].resize(S, H);
    for (int h = 0; h < H; ++h) {
      out.eta_group[j].col(h) = eta_c.col(h) * (s_jh(j, h) / n[j]);
    }
  }
  out.eta_shared.resize(S, H);
  for (int h = 0; h < H; ++h) {
    out.eta_shared.col(h) = eta_c.col(h) * (s_jh.col(h).sum() / n_total);
  }
  return out;
}

SignedPerm best_signed_permutation(const Eigen::MatrixXd& draw_eta,
                                   const Eigen::MatrixXd& ref_eta) {
  const int H = static_cast<int>(draw_eta.cols());
  if (ref_eta.cols() != H || ref_eta.rows() != draw_eta.rows()) {
    throw std::invalid_argument("best_signed_permutation: shape mismatch");
  }
  if (H > 8) {
    throw std::invalid_argument(
        "best_signed_permutation: exhaustive search not supported for H > 8");
  }
  // residual(P) = sum_k ||draw col src_k||^2 + ||ref col k||^2
  //              - 2 sign_k <draw col src_k, ref col k>
  const Eigen::MatrixXd cross = draw_eta.transpose() * ref_eta;  // (src, k)
  const Eigen::VectorXd draw_norm2 = draw_eta.colwise().squaredNorm();
  const Eigen::VectorXd ref_norm2 = ref_eta.colwise().squaredNorm();

  Candidate best;
  std::vector<int> perm(H);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    for (int bits = 0; bits < (1 << H); ++bits) {
      double res = 0.0;
      for (int k = 0; k < H; ++k) {
        const int sgn = (bits >> k) & 1 ? -1 : 1;
        res += draw_norm2[perm[k]] + ref_norm2[k] - 2.0 * sgn * cross(perm[k], k);
      }
      Candidate cand;
      cand.residual = res;
      cand.perm.src = perm;
      cand.perm.sign.resize(H);
      for (int k = 0; k < H; ++k) cand.perm.sign[k] = (bits >> k) & 1 ? -1 : 1;
      if (better(cand, best)) best = cand;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best.perm;
}

void apply_permutation(NormalizedDraw& draw, const SignedPerm& perm) {
  const int H = draw.H();
  auto permute_signed = [&](const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out(m.rows(), H);
    for (int k = 0; k < H; ++k) out.col(k) = perm.sign[k] * m.col(perm.src[k]);
    return out;
  };
  auto permute_abs = [&](const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out(m.rows(), H);
    for (int k = 0; k < H; ++k) out.col(k) = m.col(perm.src[k]);
    return out;
  };
  draw.eta_shared = permute_signed(draw.eta_shared);
  for (auto& g : draw.eta_group) g = permute_signed(g);
  for (auto& w : draw.w_ind) w = permute_abs(w);
}

namespace {

SignedPerm compose(const SignedPerm& first, const SignedPerm& then) {
  SignedPerm out;
  const int H = static_cast<int>(first.src.size());
  out.src.resize(H);
  out.sign.resize(H);
  for (int k = 0; k < H; ++k) {
    out.src[k] = first.src[then.src[k]];
    out.sign[k] = first.sign[then.src[k]] * then.sign[k];
  }
  return out;
}

double aligned_residual(const Eigen::MatrixXd& draw_eta,
                        const Eigen::MatrixXd& ref_eta) {
  const SignedPerm p = best_signed_permutation(draw_eta, ref_eta);
  double res = 0.0;
  for (int k = 0; k < draw_eta.cols(); ++k) {
    res += (p.sign[k] * draw_eta.col(p.src[k]) - ref_eta.col(k)).squaredNorm();
  }
  return res;
}

Eigen::MatrixXd columnwise_median(const std::vector<const Eigen::MatrixXd*>& mats) {
  const int S = static_cast<int>(mats[0]->rows());
  const int H = static_cast<int>(mats[0]->cols());
  Eigen::MatrixXd med(S, H);
  std::vector<double> buf(mats.size());
  for (int s = 0; s < S; ++s) {
    for (int h = 0; h < H; ++h) {
      for (size_t t = 0; t < mats.size(); ++t) buf[t] = (*mats[t])(s, h);
      std::sort(buf.begin(), buf.end());
      med(s, h) = quantile_type7(buf, 0.5);
    }
  }
  return med;
}

}  // namespace

AlignedSamples align_chain(const sampler::ChainOutput& chain, std::uint64_t seed,
                           bool parallel, int max_passes) {
  if (chain.draws.empty()) {
    throw ValidationError("align_chain: chain has no stored draws");
  }
  const int H = chain.draws.front().H;
  for (const auto& d : chain.draws) {
    if (d.H != H) {
      throw ValidationError("align_chain: draws must share a frozen H");
    }
  }
  std::vector<int> n;
  for (const auto& w : chain.draws.front().w_ind) {
    n.push_back(static_cast<int>(w.rows()));
  }

  AlignedSamples out;
  const int T_all = static_cast<int>(chain.draws.size());
  std::vector<NormalizedDraw> normalized;
  normalized.reserve(T_all);
  for (int t = 0; t < T_all; ++t) {
    try {
      normalized.push_back(center_and_rescale(chain.draws[t], n));
    } catch (const DegenerateDraw&) {
      ++out.dropped;
    }
  }
  if (normalized.empty()) {
    throw ValidationError("align_chain: all draws degenerate");
  }
  const int T = static_cast<int>(normalized.size());

  // reference: the draw with the smallest summed aligned residual against a
  // random probe set of (up to) 50 draws
  Rng rng(seed);
  const int n_probe = std::min(50, T);
  std::vector<int> probe(T);
  std::iota(probe.begin(), probe.end(), 0);
  for (int k = 0; k < n_probe; ++k) {
    const int m = k + static_cast<int>(rng.uniform() * (T - k));
    std::swap(probe[k], probe[std::min(m, T - 1)]);
  }
  std::vector<double> cost(T, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (int t = 0; t < T; ++t) {
    double c = 0.0;
    for (int k = 0; k < n_probe; ++k) {
      c += aligned_residual(normalized[probe[k]].eta_shared,
                            normalized[t].eta_shared);
    }
    cost[t] = c;
  }
  int ref_idx = 0;
  for (int t = 1; t < T; ++t) {
    if (cost[t] < cost[ref_idx]) ref_idx = t;
  }
  Eigen::MatrixXd reference = normalized[ref_idx].eta_shared;

  std::vector<SignedPerm> perms(T, SignedPerm::identity(H));
  std::vector<NormalizedDraw> aligned = normalized;
  for (int pass = 0; pass < max_passes; ++pass) {
    out.passes = pass + 1;
    int changed = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : changed) if (parallel)
#endif
    for (int t = 0; t < T; ++t) {
      const SignedPerm p =
          best_signed_permutation(normalized[t].eta_shared, reference);
      if (!(p == perms[t])) {
        perms[t] = p;
        ++changed;
      }
      aligned[t] = normalized[t];
      apply_permutation(aligned[t], perms[t]);
    }
    std::vector<const Eigen::MatrixXd*> mats(T);
    for (int t = 0; t < T; ++t) mats[t] = &aligned[t].eta_shared;
    reference = columnwise_median(mats);
    if (changed == 0) break;
  }

  out.draws = std::move(aligned);
  out.perms = std::move(perms);
  out.reference = std::move(reference);
  return out;
}

void align_across_chains(std::vector<AlignedSamples>& chains) {
  if (chains.size() < 2) return;
  const Eigen::MatrixXd& ref = chains[0].reference;
  for (size_t k = 1; k < chains.size(); ++k) {
    const SignedPerm p = best_signed_permutation(chains[k].reference, ref);
    if (p.is_identity()) continue;
    for (size_t t = 0; t < chains[k].draws.size(); ++t) {
      apply_permutation(chains[k].draws[t], p);
      chains[k].perms[t] = compose(chains[k].perms[t], p);
    }
    Eigen::MatrixXd permuted(ref.rows(), ref.cols());
    for (int c = 0; c < ref.cols(); ++c) {
      permuted.col(c) = p.sign[c] * chains[k].reference.col(p.src[c]);
    }
    chains[k].reference = permuted;
  }
}

double quantile_type7(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile_type7: empty sample");
  if (p <= 0.0) return sorted.front();
  if (p >= 1.0) return sorted.back();
  const double pos = p * (sorted.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

namespace {

SummaryEntry summarize_series(std::vector<double>& series, double level) {
  std::sort(series.begin(), series.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile_type7(series, 0.5), quantile_type7(series, tail),
          quantile_type7(series, 1.0 - tail)};
}

}  // namespace

PosteriorSummary summarize(const std::vector<AlignedSamples>& aligned,
                           const std::vector<sampler::ChainOutput>& chains,
                           double level) {
  if (chains.empty() || chains.front().draws.empty()) {
    throw ValidationError("summarize: no draws");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw ValidationError("summarize: credible level must be in (0, 1)");
  }

  PosteriorSummary out;
  const ModelState& first = chains.front().draws.front();
  out.S = first.S();
  out.J = first.J();
  out.H = first.H;
  out.level = level;
  for (const auto& w : first.w_ind) out.n.push_back(static_cast<int>(w.rows()));

  // pooled raw draws: individual and group distances, noise variances
  std::vector<const ModelState*> raw;
  for (const auto& c : chains) {
    for (const auto& d : c.draws) raw.push_back(&d);
  }
  const int T = static_cast<int>(raw.size());

  std::vector<double> series(T);
  for (int j = 0; j < out.J; ++j) {
    for (int i = 0; i < out.n[j]; ++i) {
      for (int s = 1; s < out.S; ++s) {
        for (int r = 0; r < s; ++r) {
          for (int t = 0; t < T; ++t) {
            series[t] = model::latent_distance(*raw[t], j, i, s, r);
          }
          out.delta_ind.push_back(summarize_series(series, level));
        }
      }
    }
  }
  for (int j = 0; j < out.J; ++j) {
    for (int s = 1; s < out.S; ++s) {
      for (int r = 0; r < s; ++r) {
        for (int t = 0; t < T; ++t) {
          double mean = 0.0;
          for (int i = 0; i < out.n[j]; ++i) {
            mean += model::latent_distance(*raw[t], j, i, s, r);
          }
          series[t] = mean / out.n[j];
        }
        out.delta_group.push_back(summarize_series(series, level));
      }
    }
  }
  for (int j = 0; j < out.J; ++j) {
    for (int t = 0; t < T; ++t) series[t] = raw[t]->sigma2_eps[j];
    out.sigma2.push_back(summarize_series(series, level));
  }

  // pooled aligned draws: features and weights
  std::vector<const NormalizedDraw*> ali;
  for (const auto& a : aligned) {
    for (const auto& d : a.draws) ali.push_back(&d);
  }
  if (ali.empty()) throw ValidationError("summarize: no aligned draws");
  const int TA = static_cast<int>(ali.size());
  std::vector<double> aseries(TA);

  for (int s = 0; s < out.S; ++s) {
    for (int h = 0; h < out.H; ++h) {
      for (int t = 0; t < TA; ++t) aseries[t] = ali[t]->eta_shared(s, h);
      out.eta_shared.push_back(summarize_series(aseries, level));
    }
  }
  for (int j = 0; j < out.J; ++j) {
    for (int s = 0; s < out.S; ++s) {
      for (int h = 0; h < out.H; ++h) {
        for (int t = 0; t < TA; ++t) aseries[t] = ali[t]->eta_group[j](s, h);
        out.eta_group.push_back(summarize_series(aseries, level));
      }
    }
  }
  for (int j = 0; j < out.J; ++j) {
    for (int i = 0; i < out.n[j]; ++i) {
      std::vector<Eigen::MatrixXd> feats(TA);
      for (int t = 0; t < TA; ++t) feats[t] = ali[t]->eta_ind(j, i);
      for (int s = 0; s < out.S; ++s) {
        for (int h = 0; h < out.H; ++h) {
          for (int t = 0; t < TA; ++t) aseries[t] = feats[t](s, h);
          out.eta_ind.push_back(summarize_series(aseries, level));
        }
      }
    }
  }
  for (int j = 0; j < out.J; ++j) {
    for (int t = 0; t < TA; ++t) aseries[t] = ali[t]->w_group[j];
    out.w_group.push_back(summarize_series(aseries, level));
  }
  for (int j = 0; j < out.J; ++j) {
    for (int i = 0; i < out.n[j]; ++i) {
      for (int h = 0; h < out.H; ++h) {
        for (int t = 0; t < TA; ++t) aseries[t] = ali[t]->w_ind[j](i, h);
        out.w_ind.push_back(summarize_series(aseries, level));
      }
    }
  }

  // H over the post burn-in trace, pooled across chains
  std::vector<double> hs;
  for (const auto& c : chains) {
    for (long t = c.meta.burn_in; t < static_cast<long>(c.H_trace.size()); ++t) {
      hs.push_back(static_cast<double>(c.H_trace[t]));
    }
  }
  out.H_summary = summarize_series(hs, level);
  return out;
}

}  // namespace mixmds::postprocess
