#ifndef COALCLUST_GREEDY_HPP
#define COALCLUST_GREEDY_HPP

#include <optional>

#include "coalclust/kernels.hpp"

namespace coalclust {

// One candidate coalescence: the pair, its rate-weighted optimal duration and
// the local log term -rate*delta + log Z at that duration.
struct PairScore {
  int left = -1;
  int right = -1;
  double delta_opt = 0.0;
  double local_log_term = 0.0;
};

struct GreedyStats {
  long pair_evaluations = 0;  // optimal-duration solves performed
};

struct GreedyResult {
  Genealogy tree;
  double log_joint = 0.0;
  GreedyStats stats;
};

// Merge the pair maximizing the local term -C(n-i+1,2)*delta + log Z at its
// optimal duration; all pair optima recomputed each iteration. O(n^3).
GreedyResult greedy_max_prob(const DataMatrix& data, const KernelParams& params);

// Merge the pair with the smallest optimal duration under the true prior
// rate. O(n^3).
GreedyResult greedy_min_duration(const DataMatrix& data, const KernelParams& params);

// Rate-1 optima cached per unordered pair (they depend only on the pair, not
// the iteration), merge the pair with the most recent optimal time. O(n^2)
// pair evaluations in total.
GreedyResult greedy_rate1(const DataMatrix& data, const KernelParams& params);

}  // namespace coalclust

#endif
