#include "coalclust/greedy.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "coalclust/error.hpp"
#include "coalclust/mathutil.hpp"

namespace coalclust {

namespace {

constexpr double kMinDelta = 1e-12;  // keeps event times strictly decreasing

struct ActiveNode {
  int ref;
  SubtreeMessage message;
};

std::vector<ActiveNode> initial_nodes(const DataMatrix& data, const KernelParams& params) {
  if (data.rows() < 2) fail(ErrorKind::argument, "need at least 2 rows");
  std::vector<ActiveNode> nodes(data.rows());
  for (int r = 0; r < data.rows(); ++r) {
    nodes[r] = {r, leaf_message(data, r, params)};
  }
  return nodes;
}

// Shared driver for MaxProb / MinDuration: all pair optima are recomputed
// every iteration because the prior rate changes with i.
GreedyResult run_recomputing(const DataMatrix& data, const KernelParams& params,
                             bool pick_max_prob) {
  const int n = data.rows();
  std::vector<ActiveNode> active = initial_nodes(data, params);
  std::vector<CoalescentEvent> events;
  events.reserve(n - 1);
  GreedyStats stats;
  double prev_time = 0.0;
  double log_joint = 0.0;
  for (int i = 1; i <= n - 1; ++i) {
    const int m = n - i + 1;
    const double rate = pairs_count(m);
    std::optional<PairScore> best;
    double best_value = -kPosInf;
    int best_a = -1, best_b = -1;
    for (int a = 0; a < static_cast<int>(active.size()); ++a) {
      for (int b = a + 1; b < static_cast<int>(active.size()); ++b) {
        const double delta =
            optimal_delta(active[a].message, active[b].message, prev_time, rate, params);
        ++stats.pair_evaluations;
        PairScore score{std::min(active[a].ref, active[b].ref),
                        std::max(active[a].ref, active[b].ref), delta, 0.0};
        double value = -delta;
        if (pick_max_prob) {
          const double t = prev_time - std::max(delta, kMinDelta);
          const MergeResult mr = merge(active[a].message, active[b].message, t, params);
          score.local_log_term = -rate * delta + mr.log_z;
          value = score.local_log_term;
        }
        // Ties broken by the smallest (left, right) node-ref pair.
        const bool better = !best || value > best_value ||
                            (value == best_value &&
                             std::make_pair(score.left, score.right) <
                                 std::make_pair(best->left, best->right));
        if (better) {
          best = score;
          best_value = value;
          best_a = a;
          best_b = b;
        }
      }
    }
    const double delta = std::max(best->delta_opt, kMinDelta);
    const double t = prev_time - delta;
    MergeResult mr = merge(active[best_a].message, active[best_b].message, t, params);
    log_joint += -rate * delta + mr.log_z;
    events.push_back({std::min(best->left, best->right), std::max(best->left, best->right), delta});
    active[best_a] = {n + i - 1, std::move(mr.message)};
    active.erase(active.begin() + best_b);
    prev_time = t;
  }
  return {Genealogy(n, std::move(events)), log_joint, stats};
}

}  // namespace

GreedyResult greedy_max_prob(const DataMatrix& data, const KernelParams& params) {
  return run_recomputing(data, params, /*pick_max_prob=*/true);
}

GreedyResult greedy_min_duration(const DataMatrix& data, const KernelParams& params) {
  return run_recomputing(data, params, /*pick_max_prob=*/false);
}

GreedyResult greedy_rate1(const DataMatrix& data, const KernelParams& params) {
  const int n = data.rows();
  std::vector<ActiveNode> active = initial_nodes(data, params);
  std::vector<CoalescentEvent> events;
  events.reserve(n - 1);
  GreedyStats stats;

  // With the prior rate fixed at 1 the optimal absolute coalescence time of a
  // pair does not depend on the previous event time, so it is computed once
  // when the pair first exists; clamping (delta >= 0) only ever tightens as
  // time recedes, min(cached, prev_time) stays exact.
  std::map<std::pair<int, int>, double> best_time;
  auto pair_time = [&](const ActiveNode& x, const ActiveNode& y, double prev_time) {
    const auto key = std::minmax(x.ref, y.ref);
    auto it = best_time.find(key);
    if (it == best_time.end()) {
      const double delta = optimal_delta(x.message, y.message, prev_time, 1.0, params);
      ++stats.pair_evaluations;
      it = best_time.emplace(key, prev_time - delta).first;
    }
    return it->second;
  };

  double prev_time = 0.0;
  double log_joint = 0.0;
  for (int i = 1; i <= n - 1; ++i) {
    const double rate = pairs_count(n - i + 1);
    int best_a = -1, best_b = -1;
    double best_t = -kPosInf;
    for (int a = 0; a < static_cast<int>(active.size()); ++a) {
      for (int b = a + 1; b < static_cast<int>(active.size()); ++b) {
        const double t = std::min(pair_time(active[a], active[b], prev_time), prev_time);
        const auto key = std::minmax(active[a].ref, active[b].ref);
        const auto best_key = best_a >= 0
                                  ? std::minmax(active[best_a].ref, active[best_b].ref)
                                  : std::make_pair(-1, -1);
        if (best_a < 0 || t > best_t || (t == best_t && key < best_key)) {
          best_a = a;
          best_b = b;
          best_t = t;
        }
      }
    }
    const double delta = std::max(prev_time - best_t, kMinDelta);
    const double t = prev_time - delta;
    MergeResult mr = merge(active[best_a].message, active[best_b].message, t, params);
    log_joint += -rate * delta + mr.log_z;
    events.push_back({std::min(active[best_a].ref, active[best_b].ref),
                      std::max(active[best_a].ref, active[best_b].ref), delta});
    active[best_a] = {n + i - 1, std::move(mr.message)};
    active.erase(active.begin() + best_b);
    prev_time = t;
  }
  return {Genealogy(n, std::move(events)), log_joint, stats};
}

}  // namespace coalclust
