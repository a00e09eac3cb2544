#pragma once

#include "mixmds/sampler.hpp"

namespace mixmds::postprocess {

// Raised when a draw cannot be normalized (zero or non-finite weight sums).
class DegenerateDraw : public std::runtime_error {
 public:
  explicit DegenerateDraw(const std::string& what) : std::runtime_error(what) {}
};

// Signed permutation of feature columns: aligned column k is
// sign[k] * source column src[k]. Weight columns follow |P| (no signs).
struct SignedPerm {
  std::vector<int> src;
  std::vector<int> sign;

  static SignedPerm identity(int H);
  bool is_identity() const;
  bool operator==(const SignedPerm& other) const = default;

  // canonical encoding used for deterministic lexicographic tie-breaking
  std::vector<int> encode() const;
};

// One draw after centering and weight/feature rescaling. The exact product
// relation eta_ind = w_group * w_ind * eta_group holds at group level; the
// shared features are the grand mean of the individual features.
struct NormalizedDraw {
  Eigen::MatrixXd eta_shared;             // S x H, columns sum to 0
  std::vector<Eigen::MatrixXd> eta_group; // per group: S x H
  Eigen::VectorXd w_group;                // sums to J
  std::vector<Eigen::MatrixXd> w_ind;     // per group: n_j x H

  int S() const { return static_cast<int>(eta_shared.rows()); }
  int H() const { return static_cast<int>(eta_shared.cols()); }
  int J() const { return static_cast<int>(w_group.size()); }

  // individual feature matrix (S x H) of subject i in group j
  Eigen::MatrixXd eta_ind(int j, int i) const;
  double latent_distance(int j, int i, int s, int r) const;
};

// Centering and rescaling of one draw (distances are preserved exactly):
//   1. subtract the column means of the shared features,
//   2. renormalize weights so sum_j w_group = J and, for every (j, h),
//      sum_i w_group[j] * w_ind[j](i, h) = n_j,
//   3. group features become the group means of the individual features and
//      shared features their grand mean.
NormalizedDraw center_and_rescale(const ModelState& state, const std::vector<int>& n);

// Exhaustive search over all 2^H * H! signed permutations of the draw columns
// minimizing ||draw * P - ref||_F; ties resolved by lexicographic encoding.
SignedPerm best_signed_permutation(const Eigen::MatrixXd& draw_eta,
                                   const Eigen::MatrixXd& ref_eta);

void apply_permutation(NormalizedDraw& draw, const SignedPerm& perm);

struct AlignedSamples {
  std::vector<NormalizedDraw> draws;
  std::vector<SignedPerm> perms;   // permutation applied to each draw
  Eigen::MatrixXd reference;       // final shared-feature reference
  int dropped = 0;                 // degenerate draws removed
  int passes = 0;                  // refinement passes used
};

// Normalizes every stored draw, picks a reference (the draw with the smallest
// summed aligned residual to 50 randomly probed draws), aligns all draws to it
// and refines the reference by the element-wise median until no permutation
// changes (at most max_passes). Draw-level work runs under OpenMP when
// `parallel`; results are identical to the serial path.
AlignedSamples align_chain(const sampler::ChainOutput& chain, std::uint64_t seed,
                           bool parallel = true, int max_passes = 20);

// Applies one signed permutation to every draw of chains 2..K so their
// references match chain 1's, making pooled summaries meaningful.
void align_across_chains(std::vector<AlignedSamples>& chains);

// Linear interpolation between order statistics (type 7); `sorted` ascending.
double quantile_type7(const std::vector<double>& sorted, double p);

struct SummaryEntry {
  double median = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// Posterior medians and equal-tailed credible intervals for every reported
// quantity. Flat storage; index helpers follow the natural (j, i, s, r, h)
// nesting with r < s pairs ordered canonically.
struct PosteriorSummary {
  int S = 0, J = 0, H = 0;
  std::vector<int> n;
  double level = 0.9;

  std::vector<SummaryEntry> delta_ind;    // (j, i, pair)
  std::vector<SummaryEntry> delta_group;  // (j, pair)
  std::vector<SummaryEntry> eta_shared;   // (s, h)
  std::vector<SummaryEntry> eta_group;    // (j, s, h)
  std::vector<SummaryEntry> eta_ind;      // (j, i, s, h)
  std::vector<SummaryEntry> w_group;      // (j)
  std::vector<SummaryEntry> w_ind;        // (j, i, h)
  std::vector<SummaryEntry> sigma2;       // (j)
  SummaryEntry H_summary;                 // over post burn-in H trace
};

// Summaries over the pooled draws of one or more (cross-aligned) chains.
// Distances and sigma2 come from the raw chain draws (identifiable before
// alignment); features and weights from the aligned samples.
PosteriorSummary summarize(const std::vector<AlignedSamples>& aligned,
                           const std::vector<sampler::ChainOutput>& chains,
                           double level = 0.9);

}  // namespace mixmds::postprocess
