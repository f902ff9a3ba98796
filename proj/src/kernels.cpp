#include "coalclust/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "coalclust/error.hpp"
#include "coalclust/mathutil.hpp"

namespace coalclust {

KernelParams KernelParams::brownian_diag(std::vector<double> lambda_diag) {
  KernelParams p;
  p.model = Model::brownian;
  p.lambda = std::move(lambda_diag);
  p.check();
  return p;
}

KernelParams KernelParams::multinomial(std::vector<double> rates,
                                       std::vector<std::vector<double>> equilibria) {
  KernelParams p;
  p.model = Model::multinomial;
  p.lambda = std::move(rates);
  p.q = std::move(equilibria);
  p.check();
  return p;
}

void KernelParams::check() const {
  if (lambda.empty()) fail(ErrorKind::configuration, "params have no dimensions");
  for (double l : lambda) {
    if (!(l > 0.0) || !std::isfinite(l)) {
      fail(ErrorKind::configuration, "rates must be strictly positive");
    }
  }
  if (model == Model::multinomial) {
    if (q.size() != lambda.size()) {
      fail(ErrorKind::configuration, "equilibrium count does not match dimension count");
    }
    for (const auto& qd : q) {
      if (qd.size() < 2) fail(ErrorKind::configuration, "each dimension needs K >= 2");
      double total = 0.0;
      for (double v : qd) {
        if (!(v > 0.0)) fail(ErrorKind::configuration, "equilibrium entries must be positive");
        total += v;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        fail(ErrorKind::configuration, "equilibrium must sum to 1");
      }
    }
  }
}

SubtreeMessage leaf_message(const DataMatrix& data, int row, const KernelParams& params) {
  const int d = params.dims();
  if (data.cols() != d) fail(ErrorKind::data, "datum arity does not match params");
  SubtreeMessage m;
  m.time = 0.0;
  m.log_norm = 0.0;
  if (params.model == Model::brownian) {
    m.mean.assign(d, 0.0);
    m.var_scale.assign(d, kPosInf);
    for (int c = 0; c < d; ++c) {
      if (data.observed(row, c)) {
        m.mean[c] = data.get(row, c);
        m.var_scale[c] = 0.0;
      }
    }
  } else {
    m.site.resize(d);
    for (int c = 0; c < d; ++c) {
      const int k = params.levels(c);
      if (data.observed(row, c)) {
        const int level = data.get_level(row, c);
        if (level < 0 || level >= k) {
          fail(ErrorKind::data, "categorical value out of range at row " + std::to_string(row) +
                                    ", column " + std::to_string(c));
        }
        m.site[c].assign(k, 0.0);
        m.site[c][level] = 1.0 / params.q[c][level];  // indicator / q so q.M = 1
      } else {
        m.site[c].assign(k, 1.0);  // equilibrium-neutral
      }
    }
  }
  return m;
}

MergeResult merge_brownian(const SubtreeMessage& left, const SubtreeMessage& right,
                           double t_merge, const KernelParams& params) {
  if (t_merge > left.time || t_merge > right.time) {
    fail(ErrorKind::time_order, "merge time is later than a child formation time");
  }
  const int d = params.dims();
  MergeResult result;
  result.message.time = t_merge;
  result.message.mean.assign(d, 0.0);
  result.message.var_scale.assign(d, kPosInf);
  double log_z = 0.0;
  const double el = left.time - t_merge;
  const double er = right.time - t_merge;
  for (int c = 0; c < d; ++c) {
    const bool obs_l = std::isfinite(left.var_scale[c]);
    const bool obs_r = std::isfinite(right.var_scale[c]);
    if (obs_l && obs_r) {
      const double wl = left.var_scale[c] + el;   // child variance scales at t_merge
      const double wr = right.var_scale[c] + er;
      const double s = wl + wr;
      const double diff = left.mean[c] - right.mean[c];
      log_z += -0.5 * std::log(2.0 * M_PI * params.lambda[c] * s) -
               diff * diff / (2.0 * params.lambda[c] * s);
      result.message.var_scale[c] = (wl * wr) / s;
      result.message.mean[c] = (left.mean[c] * wr + right.mean[c] * wl) / s;
    } else if (obs_l) {
      result.message.var_scale[c] = left.var_scale[c] + el;
      result.message.mean[c] = left.mean[c];
    } else if (obs_r) {
      result.message.var_scale[c] = right.var_scale[c] + er;
      result.message.mean[c] = right.mean[c];
    }
  }
  result.log_z = log_z;
  result.message.log_norm = left.log_norm + right.log_norm + log_z;
  return result;
}

MergeResult merge_multinomial(const SubtreeMessage& left, const SubtreeMessage& right,
                              double t_merge, const KernelParams& params) {
  if (t_merge > left.time || t_merge > right.time) {
    fail(ErrorKind::time_order, "merge time is later than a child formation time");
  }
  const int d = params.dims();
  MergeResult result;
  result.message.time = t_merge;
  result.message.site.resize(d);
  double log_z = 0.0;
  for (int c = 0; c < d; ++c) {
    const int k = params.levels(c);
    const double decay_l = std::exp(-params.lambda[c] * (left.time - t_merge));
    const double decay_r = std::exp(-params.lambda[c] * (right.time - t_merge));
    double sum_qmm = 0.0;
    for (int v = 0; v < k; ++v) sum_qmm += params.q[c][v] * left.site[c][v] * right.site[c][v];
    const double z = 1.0 - decay_l * decay_r * (1.0 - sum_qmm);
    if (!(z > 0.0)) {
      fail(ErrorKind::degenerate_likelihood,
           "Z <= 0 in dimension " + std::to_string(c) + " (contradictory observations at zero duration)");
    }
    auto& parent = result.message.site[c];
    parent.assign(k, 0.0);
    double qm = 0.0;
    for (int v = 0; v < k; ++v) {
      const double nl = 1.0 - decay_l * (1.0 - left.site[c][v]);
      const double nr = 1.0 - decay_r * (1.0 - right.site[c][v]);
      parent[v] = nl * nr / z;
      qm += params.q[c][v] * parent[v];
    }
    // Guard against drift: enforce q.M = 1 exactly.
    for (int v = 0; v < k; ++v) parent[v] /= qm;
    log_z += std::log(z);
  }
  result.log_z = log_z;
  result.message.log_norm = left.log_norm + right.log_norm + log_z;
  return result;
}

MergeResult merge(const SubtreeMessage& left, const SubtreeMessage& right, double t_merge,
                  const KernelParams& params) {
  return params.model == Model::brownian ? merge_brownian(left, right, t_merge, params)
                                         : merge_multinomial(left, right, t_merge, params);
}

namespace {

// Shared-dimension summary for the brownian duration optimum.
struct BrownianPairStats {
  int dims = 0;            // dimensions observed on both sides
  double mahalanobis = 0.0;  // sum diff^2 / lambda over those dimensions
  std::vector<double> base;  // per-dim v_l + v_r + t_l + t_r - 2*t_prev
  double base_min = kPosInf, base_max = 0.0;
};

BrownianPairStats brownian_pair_stats(const SubtreeMessage& left, const SubtreeMessage& right,
                                      double prev_time, const KernelParams& params) {
  BrownianPairStats st;
  for (int c = 0; c < params.dims(); ++c) {
    if (!std::isfinite(left.var_scale[c]) || !std::isfinite(right.var_scale[c])) continue;
    const double diff = left.mean[c] - right.mean[c];
    st.mahalanobis += diff * diff / params.lambda[c];
    const double a = left.var_scale[c] + right.var_scale[c] + (left.time - prev_time) +
                     (right.time - prev_time);
    st.base.push_back(a);
    st.base_min = std::min(st.base_min, a);
    st.base_max = std::max(st.base_max, a);
    ++st.dims;
  }
  return st;
}

}  // namespace

double optimal_delta_brownian(const SubtreeMessage& left, const SubtreeMessage& right,
                              double prev_time, double rate, const KernelParams& params) {
  const BrownianPairStats st = brownian_pair_stats(left, right, prev_time, params);
  if (st.dims == 0) return 0.0;  // no shared information: prior alone, peaked at 0
  const double d = st.dims;
  double mean_base = 0.0;
  for (double a : st.base) mean_base += a;
  mean_base /= d;
  // Closed form: the maximizer of exp(-rate*delta) * Z(delta) for a common
  // per-dimension base scale.
  double delta = (std::sqrt(4.0 * rate * st.mahalanobis + d * d) - d) / (4.0 * rate) -
                 0.5 * mean_base;
  if (st.base_max - st.base_min > 1e-12 * (1.0 + st.base_max)) {
    // Heterogeneous variance scales (missing data): polish with Newton on
    // g'(delta) = -rate + sum_d [ -1/(a_d+2delta) + diff_d^2/(lambda_d (a_d+2delta)^2) ].
    std::vector<double> diff2(st.dims);
    {
      int j = 0;
      for (int c = 0; c < params.dims(); ++c) {
        if (!std::isfinite(left.var_scale[c]) || !std::isfinite(right.var_scale[c])) continue;
        const double diff = left.mean[c] - right.mean[c];
        diff2[j++] = diff * diff / params.lambda[c];
      }
    }
    auto gprime = [&](double x) {
      double g = -rate;
      for (int j = 0; j < st.dims; ++j) {
        const double u = st.base[j] + 2.0 * x;
        g += -1.0 / u + diff2[j] / (u * u);
      }
      return g;
    };
    if (gprime(0.0) <= 0.0) return 0.0;
    double lo = 0.0;
    double hi = std::max(delta, 1.0);
    while (gprime(hi) > 0.0 && hi < 1e12) hi *= 2.0;
    double x = std::clamp(delta, lo, hi);
    for (int iter = 0; iter < 100; ++iter) {
      const double g = gprime(x);
      if (std::abs(g) < 1e-13) break;
      if (g > 0.0) lo = x; else hi = x;
      double h = 0.0;  // g''
      for (int j = 0; j < st.dims; ++j) {
        const double u = st.base[j] + 2.0 * x;
        h += 2.0 / (u * u) - 4.0 * diff2[j] / (u * u * u);
      }
      double next = h < 0.0 ? x - g / h : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (hi - lo < 1e-14 * (1.0 + hi)) break;
      x = next;
    }
    delta = x;
  }
  return std::max(delta, 0.0);
}

double optimal_delta_multinomial(const SubtreeMessage& left, const SubtreeMessage& right,
                                 double prev_time, double rate, const KernelParams& params) {
  const int d = params.dims();
  // Per dimension: Z(delta) = 1 - c_d exp(-lambda_d (b_d + 2 delta)) with
  // c_d = 1 - sum_k q M_l M_r and b_d the elapsed time without delta.
  std::vector<double> coeff(d), lam(d), expb(d);
  for (int c = 0; c < d; ++c) {
    double sum_qmm = 0.0;
    for (int v = 0; v < params.levels(c); ++v) {
      sum_qmm += params.q[c][v] * left.site[c][v] * right.site[c][v];
    }
    coeff[c] = 1.0 - sum_qmm;
    lam[c] = params.lambda[c];
    const double b = (left.time - prev_time) + (right.time - prev_time);
    expb[c] = std::exp(-lam[c] * b);
  }
  auto gprime = [&](double x) {
    double g = -rate;
    for (int c = 0; c < d; ++c) {
      const double e = coeff[c] * expb[c] * std::exp(-2.0 * lam[c] * x);
      g += 2.0 * lam[c] * e / (1.0 - e);
    }
    return g;
  };
  // g'(0+): if any Z(0) <= 0 the derivative is +inf there; otherwise check sign.
  bool singular_at_zero = false;
  for (int c = 0; c < d; ++c) {
    if (coeff[c] * expb[c] >= 1.0) singular_at_zero = true;
  }
  if (!singular_at_zero && gprime(0.0) <= 0.0) return 0.0;
  // Find a starting point with Z > 0 everywhere and bracket the root.
  double lo = 0.0;
  if (singular_at_zero) {
    lo = 1e-300;
    for (int c = 0; c < d; ++c) {
      if (coeff[c] * expb[c] >= 1.0) {
        lo = std::max(lo, std::log(coeff[c] * expb[c]) / (2.0 * lam[c]) + 1e-12);
      }
    }
  }
  double hi = std::max(1.0, 2.0 * lo);
  int expand = 0;
  while (gprime(hi) > 0.0) {
    hi *= 2.0;
    if (++expand > 200) fail(ErrorKind::solver, "duration bracket expansion failed");
  }
  double x = 0.5 * (std::max(lo, 1e-12) + hi);
  for (int iter = 0; iter < 100; ++iter) {
    const double g = gprime(x);
    if (std::abs(g) < 1e-10) return x;
    if (g > 0.0) lo = x; else hi = x;
    if (hi - lo < 1e-12) return 0.5 * (lo + hi);
    double h = 0.0;  // g'' (always negative where Z > 0)
    for (int c = 0; c < d; ++c) {
      const double e = coeff[c] * expb[c] * std::exp(-2.0 * lam[c] * x);
      const double r = e / (1.0 - e);
      h += -4.0 * lam[c] * lam[c] * (r + r * r);
    }
    double next = h < 0.0 ? x - g / h : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  fail(ErrorKind::solver, "duration solver did not converge in 100 iterations");
}

double optimal_delta(const SubtreeMessage& left, const SubtreeMessage& right, double prev_time,
                     double rate, const KernelParams& params) {
  return params.model == Model::brownian
             ? optimal_delta_brownian(left, right, prev_time, rate, params)
             : optimal_delta_multinomial(left, right, prev_time, rate, params);
}

PairProfile::PairProfile(const SubtreeMessage& left, const SubtreeMessage& right,
                         double prev_time, const KernelParams& params)
    : model_(params.model) {
  if (model_ == Model::brownian) {
    for (int c = 0; c < params.dims(); ++c) {
      if (!std::isfinite(left.var_scale[c]) || !std::isfinite(right.var_scale[c])) continue;
      const double diff = left.mean[c] - right.mean[c];
      a_.push_back(left.var_scale[c] + right.var_scale[c] + (left.time - prev_time) +
                   (right.time - prev_time));
      b_.push_back(diff * diff / params.lambda[c]);
      c_.push_back(params.lambda[c]);
    }
  } else {
    for (int c = 0; c < params.dims(); ++c) {
      double sum_qmm = 0.0;
      for (int v = 0; v < params.levels(c); ++v) {
        sum_qmm += params.q[c][v] * left.site[c][v] * right.site[c][v];
      }
      const double b = (left.time - prev_time) + (right.time - prev_time);
      a_.push_back((1.0 - sum_qmm) * std::exp(-params.lambda[c] * b));
      c_.push_back(params.lambda[c]);
    }
  }
}

double PairProfile::log_z(double delta) const {
  double lz = 0.0;
  if (model_ == Model::brownian) {
    for (std::size_t d = 0; d < a_.size(); ++d) {
      const double u = a_[d] + 2.0 * delta;
      lz += -0.5 * std::log(2.0 * M_PI * c_[d] * u) - 0.5 * b_[d] / u;
    }
  } else {
    for (std::size_t d = 0; d < a_.size(); ++d) {
      const double z = 1.0 - a_[d] * std::exp(-2.0 * c_[d] * delta);
      if (!(z > 0.0)) return kNegInf;
      lz += std::log(z);
    }
  }
  return lz;
}

double PairProfile::mahalanobis() const {
  double total = 0.0;
  for (double v : b_) total += v;
  return total;
}

double PairProfile::base_min() const {
  double m = kPosInf;
  for (double v : a_) m = std::min(m, v);
  return m;
}

double PairProfile::base_max() const {
  double m = 0.0;
  for (double v : a_) m = std::max(m, v);
  return m;
}

double root_log_term(const SubtreeMessage&, const KernelParams&) {
  // Multinomial: the relaxing kernel from t = -inf reaches equilibrium and
  // q.M = 1 by normalization, so the term is exactly 0. Brownian: 0 by
  // convention under the improper flat root measure; the constant cancels in
  // every tree comparison.
  return 0.0;
}

TreeMessages upward_messages(const Genealogy& g, const DataMatrix& data,
                             const KernelParams& params) {
  if (g.leaf_count() != data.rows()) {
    fail(ErrorKind::argument, "tree leaf count does not match data row count");
  }
  TreeMessages tm;
  tm.node.resize(g.node_count());
  tm.event_log_z.resize(g.event_count());
  for (int leaf = 0; leaf < g.leaf_count(); ++leaf) {
    tm.node[leaf] = leaf_message(data, leaf, params);
  }
  const std::vector<double> times = g.event_times();
  double log_prior_sum = 0.0;
  const int n = g.leaf_count();
  for (int i = 0; i < g.event_count(); ++i) {
    const CoalescentEvent& e = g.event(i);
    MergeResult mr = merge(tm.node[e.left], tm.node[e.right], times[i], params);
    tm.event_log_z[i] = mr.log_z;
    tm.node[n + i] = std::move(mr.message);
    log_prior_sum -= pairs_count(n - i) * e.delta;  // event i is the (i+1)-th merge
  }
  tm.log_marginal = tm.node[g.root()].log_norm + root_log_term(tm.node[g.root()], params);
  tm.log_joint = tm.log_marginal + log_prior_sum;
  return tm;
}

double joint_log_prob(const Genealogy& g, const DataMatrix& data, const KernelParams& params) {
  return upward_messages(g, data, params).log_joint;
}

double marginal_log_prob(const Genealogy& g, const DataMatrix& data,
                         const KernelParams& params) {
  return upward_messages(g, data, params).log_marginal;
}

}  // namespace coalclust
