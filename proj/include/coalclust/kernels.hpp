#ifndef COALCLUST_KERNELS_HPP
#define COALCLUST_KERNELS_HPP

#include <vector>

#include "coalclust/data.hpp"
#include "coalclust/genealogy.hpp"

namespace coalclust {

enum class Model { brownian, multinomial };

// Observation-model parameters. Brownian diffusion with diagonal covariance
// uses `lambda` as the diagonal; the multinomial mutation process uses
// `lambda` as per-dimension rates with equilibrium simplices `q`.
struct KernelParams {
  Model model = Model::brownian;
  std::vector<double> lambda;            // D positive rates / variances
  std::vector<std::vector<double>> q;    // multinomial only: q[d] sums to 1

  int dims() const { return static_cast<int>(lambda.size()); }
  int levels(int d) const { return static_cast<int>(q[d].size()); }

  static KernelParams brownian_diag(std::vector<double> lambda_diag);
  static KernelParams multinomial(std::vector<double> rates,
                                  std::vector<std::vector<double>> equilibria);
  void check() const;  // throws Error(configuration) on invalid values
};

// Per-subtree belief summary. Brownian form: per-dimension mean and variance
// scale (in time units; the message covariance for dim d is lambda_d *
// var_scale_d, +inf marks a dimension with no observation in the subtree).
// Multinomial form: per-dimension K_d-vector normalized so q_d . site_d = 1;
// an all-ones vector is equilibrium-neutral (no observation).
// `log_norm` accumulates the log normalizers folded out of the message.
struct SubtreeMessage {
  std::vector<double> mean;                 // brownian
  std::vector<double> var_scale;            // brownian
  std::vector<std::vector<double>> site;    // multinomial
  double time = 0.0;
  double log_norm = 0.0;
};

struct MergeResult {
  double log_z = 0.0;        // log Z_rho for this merge
  SubtreeMessage message;    // parent message, log_norm folded
};

// Point-mass / equilibrium-neutral message for one data row at time 0.
SubtreeMessage leaf_message(const DataMatrix& data, int row,
                            const KernelParams& params);

MergeResult merge_brownian(const SubtreeMessage& left, const SubtreeMessage& right,
                           double t_merge, const KernelParams& params);
MergeResult merge_multinomial(const SubtreeMessage& left, const SubtreeMessage& right,
                              double t_merge, const KernelParams& params);
// Dispatch on params.model.
MergeResult merge(const SubtreeMessage& left, const SubtreeMessage& right,
                  double t_merge, const KernelParams& params);

// Duration maximizing exp(-rate*delta) * Z(delta) over delta >= 0. The
// brownian solver is the closed form (negative results clamped to 0); with
// heterogeneous per-dimension variance scales the closed form is polished by
// a safeguarded Newton so the result stays the true constrained maximizer.
double optimal_delta_brownian(const SubtreeMessage& left, const SubtreeMessage& right,
                              double prev_time, double rate,
                              const KernelParams& params);
// Safeguarded Newton on g'(delta), bisection fallback; returns 0 when
// g'(0+) <= 0.
double optimal_delta_multinomial(const SubtreeMessage& left, const SubtreeMessage& right,
                                 double prev_time, double rate,
                                 const KernelParams& params);
double optimal_delta(const SubtreeMessage& left, const SubtreeMessage& right,
                     double prev_time, double rate, const KernelParams& params);

// Precomputed log Z as a function of the duration for one candidate merge of
// two subtrees below prev_time. Used in duration integrals and proposals
// where the parent message is not needed.
class PairProfile {
 public:
  PairProfile(const SubtreeMessage& left, const SubtreeMessage& right, double prev_time,
              const KernelParams& params);
  // log Z(delta); -inf where Z <= 0 (multinomial contradictions at zero
  // elapsed time).
  double log_z(double delta) const;
  Model model() const { return model_; }
  // Brownian summaries for the closed forms.
  int shared_dims() const { return static_cast<int>(a_.size()); }
  double mahalanobis() const;      // sum diff^2/lambda over shared dims
  double base_min() const;
  double base_max() const;

 private:
  Model model_;
  // brownian: a_ = v_l+v_r+elapsed, b_ = diff^2/lambda, c_ = lambda
  // multinomial: a_ = coeff * exp(-lambda*b), c_ = lambda
  std::vector<double> a_, b_, c_;
};

// Root term of the marginal. Zero for the multinomial model (the relaxing
// kernel reaches equilibrium and messages satisfy q.M = 1) and zero by
// convention for brownian (improper flat root measure: absolute brownian
// values are comparative quantities; differences between trees are proper).
double root_log_term(const SubtreeMessage& root_message, const KernelParams& params);

// Full upward pass.
struct TreeMessages {
  std::vector<SubtreeMessage> node;   // indexed by node ref
  std::vector<double> event_log_z;    // log Z per event
  double log_marginal = 0.0;          // sum of log Z terms + root term
  double log_joint = 0.0;             // log_marginal + log prior
};

TreeMessages upward_messages(const Genealogy& g, const DataMatrix& data,
                             const KernelParams& params);

// log p(x, pi): coalescent prior plus the per-merge local likelihoods.
double joint_log_prob(const Genealogy& g, const DataMatrix& data,
                      const KernelParams& params);
// log p(x | pi): the product of merge normalizers only.
double marginal_log_prob(const Genealogy& g, const DataMatrix& data,
                         const KernelParams& params);

}  // namespace coalclust

#endif
