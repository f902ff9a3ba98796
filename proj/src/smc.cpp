#include "coalclust/smc.hpp"

#include <algorithm>
#include <cmath>

#include "coalclust/error.hpp"
#include "coalclust/mathutil.hpp"

namespace coalclust {

Particle::Particle(const DataMatrix& data, const KernelParams& params, std::uint64_t seed)
    : rng(seed) {
  const int n = data.rows();
  if (n < 2) fail(ErrorKind::argument, "need at least 2 rows");
  events.reserve(n - 1);
  active_refs.resize(n);
  active_msgs.resize(n);
  for (int r = 0; r < n; ++r) {
    active_refs[r] = r;
    active_msgs[r] = leaf_message(data, r, params);
  }
}

namespace {

// Decode pair index k in [0, C(m,2)) to slots (a < b).
std::pair<int, int> decode_pair(std::uint64_t k, int m) {
  int a = 0;
  while (k >= static_cast<std::uint64_t>(m - 1 - a)) {
    k -= m - 1 - a;
    ++a;
  }
  return {a, a + 1 + static_cast<int>(k)};
}

// Integration window for the duration posterior of one pair: beyond the
// rate-weighted optimum the integrand decays at least like exp(-rate*delta),
// so mode + 80/rate leaves tail mass far below 1e-12.
double duration_window(const SubtreeMessage& left, const SubtreeMessage& right,
                       double prev_time, double rate, const KernelParams& params) {
  const double mode = optimal_delta(left, right, prev_time, rate, params);
  return mode + 80.0 / rate + 1e-6;
}

}  // namespace

double log_gig_normalizer(double nu, double a, double b) {
  // integral_0^inf x^{nu-1} exp(-a x - b / x) dx = 2 (b/a)^{nu/2} K_nu(2 sqrt(ab))
  const double arg = 2.0 * std::sqrt(a * b);
  const double k = std::cyl_bessel_k(std::abs(nu), arg);
  return std::log(2.0) + 0.5 * nu * (std::log(b) - std::log(a)) + std::log(k);
}

double log_pair_integral(const SubtreeMessage& left, const SubtreeMessage& right,
                         double prev_time, double rate, const KernelParams& params) {
  const PairProfile profile(left, right, prev_time, params);
  if (params.model == Model::brownian) {
    const int d = profile.shared_dims();
    const double mahal = profile.mahalanobis();
    if (d >= 2 && mahal == 0.0 && profile.base_max() == 0.0) {
      fail(ErrorKind::numeric, "duration integral diverges (identical point-mass children)");
    }
    // Stable fast path: coincident fresh children (all base scales zero,
    // common lambda factored out per-dimension) are exactly generalized
    // inverse Gaussian in u = 2*delta.
    if (d > 0 && profile.base_max() < 1e-300 && mahal > 0.0) {
      double log_coeff = -std::log(2.0);  // the 1/2 from d delta = du/2
      for (int c = 0, j = 0; c < params.dims(); ++c) {
        if (!std::isfinite(left.var_scale[c]) || !std::isfinite(right.var_scale[c])) continue;
        log_coeff += -0.5 * std::log(2.0 * M_PI * params.lambda[c]);
        ++j;
      }
      const double nu = 1.0 - 0.5 * d;
      const double arg = 2.0 * std::sqrt((rate / 2.0) * (mahal / 2.0));
      if (arg > 1e-8 && arg < 650.0) {
        return log_coeff + log_gig_normalizer(nu, rate / 2.0, mahal / 2.0);
      }
    }
  }
  const double hi = duration_window(left, right, prev_time, rate, params);
  auto log_f = [&](double x) { return -rate * x + profile.log_z(x); };
  const double value = integrate_log_adaptive(log_f, 0.0, hi, 1e-11);
  if (!std::isfinite(value) && value != kNegInf) {
    fail(ErrorKind::numeric, "duration integral is not finite");
  }
  return value;
}

ProposedStep propose_prior_prior(Particle& particle, int /*iteration*/, const DataMatrix&,
                                 const KernelParams& params) {
  const int m = particle.lineages();
  const double rate = pairs_count(m);
  ProposedStep step;
  step.delta = particle.rng.exponential(rate);
  const auto [a, b] = decode_pair(particle.rng.uniform_int(static_cast<std::uint64_t>(rate)), m);
  step.slot_a = a;
  step.slot_b = b;
  const PairProfile profile(particle.active_msgs[a], particle.active_msgs[b],
                            particle.prev_time, params);
  step.log_weight_increment = profile.log_z(step.delta);
  return step;
}

ProposedStep propose_prior_post(Particle& particle, int /*iteration*/, const DataMatrix&,
                                const KernelParams& params) {
  const int m = particle.lineages();
  const double rate = pairs_count(m);
  ProposedStep step;
  step.delta = particle.rng.exponential(rate);
  std::vector<double> log_zs;
  log_zs.reserve(static_cast<std::size_t>(rate));
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      const PairProfile profile(particle.active_msgs[a], particle.active_msgs[b],
                                particle.prev_time, params);
      log_zs.push_back(profile.log_z(step.delta));
    }
  }
  const double total = log_sum_exp(log_zs);
  if (total == kNegInf) {
    fail(ErrorKind::degeneracy, "all candidate pairs have zero likelihood");
  }
  std::vector<double> weights(log_zs.size());
  for (std::size_t i = 0; i < log_zs.size(); ++i) weights[i] = std::exp(log_zs[i] - total);
  const std::size_t pick = particle.rng.categorical(weights);
  const auto [a, b] = decode_pair(pick, m);
  step.slot_a = a;
  step.slot_b = b;
  // Exact importance ratio: the pair proposal cancels Z of the chosen pair
  // but leaves the sum over pairs divided by the uniform pair prior C(m,2).
  step.log_weight_increment = total - std::log(rate);
  return step;
}

ProposedStep propose_post_post(Particle& particle, int /*iteration*/, const DataMatrix&,
                               const KernelParams& params) {
  const int m = particle.lineages();
  const double rate = pairs_count(m);
  const int pair_total = static_cast<int>(rate);
  std::vector<double> log_integrals(pair_total);
  int idx = 0;
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b, ++idx) {
      const PairProfile profile(particle.active_msgs[a], particle.active_msgs[b],
                                particle.prev_time, params);
      const double hi = duration_window(particle.active_msgs[a], particle.active_msgs[b],
                                        particle.prev_time, rate, params);
      const LogGrid grid = integrate_log_grid(
          [&](double x) { return -rate * x + profile.log_z(x); }, 0.0, hi);
      if (std::isnan(grid.log_total) || grid.log_total == kPosInf) {
        fail(ErrorKind::numeric,
             "duration integral not finite for pair " + std::to_string(idx));
      }
      log_integrals[idx] = grid.log_total;
    }
  }
  const double total = log_sum_exp(log_integrals);
  if (total == kNegInf) fail(ErrorKind::degeneracy, "all pair integrals are zero");
  std::vector<double> weights(log_integrals.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] = std::exp(log_integrals[i] - total);
  }
  const std::size_t pick = particle.rng.categorical(weights);
  const auto [a, b] = decode_pair(pick, m);
  // Rebuild the chosen pair's grid and draw the duration from it.
  const PairProfile profile(particle.active_msgs[a], particle.active_msgs[b],
                            particle.prev_time, params);
  const double hi = duration_window(particle.active_msgs[a], particle.active_msgs[b],
                                    particle.prev_time, rate, params);
  const LogGrid grid = integrate_log_grid(
      [&](double x) { return -rate * x + profile.log_z(x); }, 0.0, hi);
  ProposedStep step;
  step.slot_a = a;
  step.slot_b = b;
  step.delta = grid.sample(particle.rng.uniform());
  step.log_weight_increment = total;
  return step;
}

void apply_step(Particle& particle, const ProposedStep& step, int leaf_count,
                const KernelParams& params) {
  const double t = particle.prev_time - step.delta;
  MergeResult mr = merge(particle.active_msgs[step.slot_a], particle.active_msgs[step.slot_b],
                         t, params);
  const int ref_a = particle.active_refs[step.slot_a];
  const int ref_b = particle.active_refs[step.slot_b];
  particle.events.push_back(
      {std::min(ref_a, ref_b), std::max(ref_a, ref_b), step.delta});
  particle.active_refs[step.slot_a] = leaf_count + static_cast<int>(particle.events.size()) - 1;
  particle.active_msgs[step.slot_a] = std::move(mr.message);
  particle.active_refs.erase(particle.active_refs.begin() + step.slot_b);
  particle.active_msgs.erase(particle.active_msgs.begin() + step.slot_b);
  particle.prev_time = t;
  particle.log_weight += step.log_weight_increment;
}

double ess(const ParticleEnsemble& ensemble) {
  std::vector<double> logw;
  logw.reserve(ensemble.particles.size());
  for (const Particle& p : ensemble.particles) logw.push_back(p.log_weight);
  const double lse1 = log_sum_exp(logw);
  for (double& w : logw) w *= 2.0;
  const double lse2 = log_sum_exp(logw);
  return std::exp(2.0 * lse1 - lse2);
}

void systematic_resample(ParticleEnsemble& ensemble, Rng& rng) {
  const int s = static_cast<int>(ensemble.particles.size());
  std::vector<double> logw(s);
  for (int i = 0; i < s; ++i) logw[i] = ensemble.particles[i].log_weight;
  const double total = log_sum_exp(logw);
  if (total == kNegInf) fail(ErrorKind::degeneracy, "cannot resample zero-weight ensemble");
  std::vector<double> cum(s);
  double acc = 0.0;
  for (int i = 0; i < s; ++i) {
    acc += std::exp(logw[i] - total);
    cum[i] = acc;
  }
  cum[s - 1] = 1.0;
  const double offset = rng.uniform() / s;
  std::vector<Particle> offspring;
  offspring.reserve(s);
  int src = 0;
  for (int k = 0; k < s; ++k) {
    const double position = offset + static_cast<double>(k) / s;
    while (cum[src] < position) ++src;
    offspring.push_back(ensemble.particles[src]);
  }
  ensemble.log_norm_acc += total - std::log(static_cast<double>(s));
  for (Particle& p : offspring) {
    p.log_weight = 0.0;
    // Fresh independent stream per offspring slot so copies diverge.
    p.rng = Rng(rng.next_u64());
  }
  ensemble.particles = std::move(offspring);
}

double log_marginal_estimate(const ParticleEnsemble& ensemble) {
  std::vector<double> logw;
  logw.reserve(ensemble.particles.size());
  for (const Particle& p : ensemble.particles) logw.push_back(p.log_weight);
  return ensemble.log_norm_acc + log_sum_exp(logw) -
         std::log(static_cast<double>(ensemble.particles.size()));
}

ParticleEnsemble run_smc(const DataMatrix& data, const KernelParams& params,
                         const SmcConfig& config) {
  if (config.particles < 1) fail(ErrorKind::argument, "particle count must be >= 1");
  const int n = data.rows();
  ParticleEnsemble ensemble;
  ensemble.leaf_count = n;
  ensemble.particles.reserve(config.particles);
  for (int s = 0; s < config.particles; ++s) {
    ensemble.particles.emplace_back(data, params, derive_seed(config.seed, "particle", s));
  }
  Rng resample_rng(derive_seed(config.seed, "resample"));
  for (int i = 1; i <= n - 1; ++i) {
    for (Particle& p : ensemble.particles) {
      ProposedStep step;
      switch (config.proposal) {
        case Proposal::prior_prior: step = propose_prior_prior(p, i, data, params); break;
        case Proposal::prior_post: step = propose_prior_post(p, i, data, params); break;
        case Proposal::post_post: step = propose_post_post(p, i, data, params); break;
      }
      apply_step(p, step, n, params);
    }
    ensemble.iteration = i;
    bool any_finite = false;
    for (const Particle& p : ensemble.particles) {
      if (p.log_weight > kNegInf) any_finite = true;
    }
    if (!any_finite) {
      fail(ErrorKind::degeneracy, "all particle weights vanished at iteration " +
                                      std::to_string(i));
    }
    const double e = ess(ensemble);
    const bool resample = e / ensemble.particles.size() < config.resample_threshold;
    ensemble.diagnostics.push_back({i, e, ensemble.log_norm_acc, resample});
    if (resample) systematic_resample(ensemble, resample_rng);
  }
  return ensemble;
}

Genealogy particle_tree(const ParticleEnsemble& ensemble, int index) {
  const Particle& p = ensemble.particles.at(index);
  if (static_cast<int>(p.events.size()) != ensemble.leaf_count - 1) {
    fail(ErrorKind::argument, "particle genealogy is incomplete");
  }
  return Genealogy(ensemble.leaf_count, p.events);
}

Genealogy best_tree(const ParticleEnsemble& ensemble) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(ensemble.particles.size()); ++i) {
    if (ensemble.particles[i].log_weight > ensemble.particles[best].log_weight) best = i;
  }
  return particle_tree(ensemble, best);
}

}  // namespace coalclust
