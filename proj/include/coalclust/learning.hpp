#ifndef COALCLUST_LEARNING_HPP
#define COALCLUST_LEARNING_HPP

#include <vector>

#include "coalclust/greedy.hpp"
#include "coalclust/kernels.hpp"
#include "coalclust/smc.hpp"

namespace coalclust {

enum class InferenceKind {
  greedy_rate1,
  greedy_max_prob,
  greedy_min_duration,
  smc_prior_prior,
  smc_prior_post,
  smc_post_post,
};

struct InferenceConfig {
  InferenceKind kind = InferenceKind::greedy_rate1;
  int particles = 100;
  double resample_threshold = 0.5;
  std::uint64_t seed = 0;
};

bool is_smc(InferenceKind kind);

// Builds one tree with the configured algorithm (for SMC: the
// highest-weight particle).
Genealogy infer_tree(const DataMatrix& data, const KernelParams& params,
                     const InferenceConfig& config);

struct FitConfig {
  int iterations = 1;       // tree / hyperparameter alternations
  double gamma_a = 1.1;     // prior on inverse variances (brownian)
  double gamma_b = 1.1;
  InferenceConfig inference;
};

struct FitResult {
  Genealogy tree;
  KernelParams params;
  std::vector<double> log_joint_trace;  // per alternation
};

// Alternates tree construction and hyperparameter MAP updates.
FitResult fit(const DataMatrix& data, const KernelParams& params0, const FitConfig& config);

// Per-dimension MAP of the brownian diagonal under independent Gamma priors
// on the inverse variances: shape a + m_d/2 (m_d = merges where the
// dimension is observed on both sides), inverse scale b^-1 + half the sum of
// squared contrasts over their time variances.
std::vector<double> estimate_brownian_lambda(const Genealogy& g, const DataMatrix& data,
                                             const KernelParams& params, double gamma_a,
                                             double gamma_b);

// Coordinate-wise safeguarded Newton ascent on the per-dimension log-marginal
// over (log lambda_d, softmax q_d). Gradients are exact (forward-mode dual
// numbers through the message recursion).
KernelParams estimate_multinomial_params(const Genealogy& g, const DataMatrix& data,
                                         const KernelParams& params0);

// Objective/gradient of one dimension's log-marginal at (log lambda, logits);
// exposed for the finite-difference checks.
double multinomial_dim_objective(const Genealogy& g, const DataMatrix& data, int dim,
                                 double log_lambda, const std::vector<double>& logits,
                                 int levels, std::vector<double>* grad = nullptr);

// Downward belief-propagation summaries. Same representation and
// normalization as SubtreeMessage; the root's down-message is the relaxed
// prior (flat for brownian, equilibrium for multinomial).
using DownMessage = SubtreeMessage;

std::vector<DownMessage> downward_pass(const Genealogy& g, const DataMatrix& data,
                                       const KernelParams& params);
std::vector<DownMessage> downward_pass(const Genealogy& g, const TreeMessages& up,
                                       const KernelParams& params);

// Density of a new complete observation under the fitted tree: sum over
// attachment branches, 10 equally spaced time samples per coalescent
// interval, an exponential-tail window of width max_j delta_j beyond the
// root.
double predictive_density_brownian(const Genealogy& g, const DataMatrix& data,
                                   const KernelParams& params,
                                   const std::vector<double>& y_new);

// Posterior for one cell.
struct CellPosterior {
  int row = 0;
  int col = 0;
  bool was_observed = false;
  double value = 0.0;                 // restored value (mean or argmax level)
  double variance = 0.0;              // brownian posterior variance
  std::vector<double> probabilities;  // categorical posterior
};

struct RestoreResult {
  DataMatrix filled;
  std::vector<CellPosterior> cells;  // one per originally missing cell
};

RestoreResult restore_missing(const Genealogy& g, const DataMatrix& data,
                              const KernelParams& params);

// Flat clustering by the per-node log likelihood ratio (stationary models
// only): walk down from the root, emit a node's leaves as one cluster when
// its log Z exceeds zero, otherwise recurse.
struct FlatCluster {
  std::vector<int> members;
  double log_lr = 0.0;
  double time = 0.0;  // coalescent time of the cluster's root (0 for singletons)
};

std::vector<FlatCluster> flat_clusters(const Genealogy& g, const DataMatrix& data,
                                       const KernelParams& params);

}  // namespace coalclust

#endif
