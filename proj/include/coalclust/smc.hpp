#ifndef COALCLUST_SMC_HPP
#define COALCLUST_SMC_HPP

#include <vector>

#include "coalclust/kernels.hpp"
#include "coalclust/rng.hpp"

namespace coalclust {

enum class Proposal { prior_prior, prior_post, post_post };

// A partially built genealogy plus an importance log-weight. Active subtree
// messages are carried so proposals do not re-run the upward pass.
struct Particle {
  std::vector<CoalescentEvent> events;
  std::vector<int> active_refs;
  std::vector<SubtreeMessage> active_msgs;
  double prev_time = 0.0;
  double log_weight = 0.0;
  Rng rng;

  Particle(const DataMatrix& data, const KernelParams& params, std::uint64_t seed);
  int lineages() const { return static_cast<int>(active_refs.size()); }
};

struct ParticleEnsemble {
  std::vector<Particle> particles;
  int iteration = 0;              // completed coalescent events per particle
  double log_norm_acc = 0.0;      // accumulated at resampling
  int leaf_count = 0;

  struct DiagnosticsRow {
    int iteration;
    double ess;
    double log_norm;
    bool resampled;
  };
  std::vector<DiagnosticsRow> diagnostics;
};

// One proposed extension of a particle: the duration, the chosen active-list
// slots, and the Eq.-style log-weight increment.
struct ProposedStep {
  double delta = 0.0;
  int slot_a = -1;
  int slot_b = -1;
  double log_weight_increment = 0.0;
};

ProposedStep propose_prior_prior(Particle& particle, int iteration, const DataMatrix& data,
                                 const KernelParams& params);
ProposedStep propose_prior_post(Particle& particle, int iteration, const DataMatrix& data,
                                const KernelParams& params);
ProposedStep propose_post_post(Particle& particle, int iteration, const DataMatrix& data,
                               const KernelParams& params);

// Applies a proposed step: merges the pair, appends the event, adds the
// weight increment.
void apply_step(Particle& particle, const ProposedStep& step, int leaf_count,
                const KernelParams& params);

// Effective sample size (sum w)^2 / sum w^2 of the normalized weights,
// computed in log space; always in [1, S].
double ess(const ParticleEnsemble& ensemble);

// Systematic (stratified) resampling: S offspring from one uniform offset.
// The mean pre-resample weight is folded into log_norm_acc and weights reset
// to uniform.
void systematic_resample(ParticleEnsemble& ensemble, Rng& rng);

// log of the current estimate of p(x): mean particle weight plus the
// accumulated resampling constants.
double log_marginal_estimate(const ParticleEnsemble& ensemble);

struct SmcConfig {
  int particles = 100;
  Proposal proposal = Proposal::prior_prior;
  double resample_threshold = 0.5;  // resample when ESS/S drops below this
  std::uint64_t seed = 0;
};

ParticleEnsemble run_smc(const DataMatrix& data, const KernelParams& params,
                         const SmcConfig& config);

// Tree of the highest-weight particle (ties: lowest index).
Genealogy best_tree(const ParticleEnsemble& ensemble);
Genealogy particle_tree(const ParticleEnsemble& ensemble, int index);

// For the brownian model the duration posterior of a pair is generalized
// inverse Gaussian; the log normalizer 2 (b/a)^{nu/2} K_nu(2 sqrt(ab)) of
// x^{nu-1} exp(-a x - b/x) is exposed for the stable-regime fast path.
double log_gig_normalizer(double nu, double a, double b);

// log integral_0^inf exp(-rate*delta) Z(delta) d delta for one candidate
// pair, used by the post-post proposal and its tests.
double log_pair_integral(const SubtreeMessage& left, const SubtreeMessage& right,
                         double prev_time, double rate, const KernelParams& params);

}  // namespace coalclust

#endif
