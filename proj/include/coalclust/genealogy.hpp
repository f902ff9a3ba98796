#ifndef COALCLUST_GENEALOGY_HPP
#define COALCLUST_GENEALOGY_HPP

#include <string>
#include <vector>

#include "coalclust/rng.hpp"

namespace coalclust {

// One coalescent event: two node refs merge after waiting `delta` beyond the
// previous event. Node refs address leaves 0..n-1 and earlier events
// n..2n-2 (event j is node n+j).
struct CoalescentEvent {
  int left = -1;
  int right = -1;
  double delta = 0.0;
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;  // e.g. zero durations
  bool ok() const { return errors.empty(); }
};

// A genealogy of n leaves: an ordered sequence of n-1 events, most recent
// first. Coalescent times are derived from the durations, never stored.
// Immutable after construction.
class Genealogy {
 public:
  // Throws Error(structural) if the events do not form a single-rooted
  // binary tree over the leaves or any duration is negative.
  Genealogy(int n, std::vector<CoalescentEvent> events);

  int leaf_count() const { return n_; }
  int event_count() const { return n_ - 1; }
  int node_count() const { return 2 * n_ - 1; }
  int root() const { return n_ + n_ - 2; }

  const std::vector<CoalescentEvent>& events() const { return events_; }
  const CoalescentEvent& event(int i) const { return events_[i]; }

  bool is_leaf(int node) const { return node < n_; }
  // Event index of an internal node ref.
  int event_of(int node) const { return node - n_; }

  // Formation time of a node: 0 for leaves, -(delta_1+...+delta_i) for the
  // node created by event i-1 (0-based index i-1).
  double node_time(int node) const;
  // All event times t_1..t_{n-1}.
  std::vector<double> event_times() const;

  // Parent node ref per node; root maps to -1.
  std::vector<int> parents() const;

  // Leaf sets per node, each sorted ascending.
  std::vector<std::vector<int>> leaf_sets() const;

 private:
  int n_;
  std::vector<CoalescentEvent> events_;
};

// Structural + duration diagnostics without throwing.
ValidationReport validate(int n, const std::vector<CoalescentEvent>& events);

// log p(pi) = sum_i -C(n-i+1,2) * delta_i  (computed in log space).
double log_prior(const Genealogy& g);

// Draws from the n-coalescent: delta_i ~ Exp(C(n-i+1,2)), merging pair
// uniform among available pairs.
Genealogy sample_genealogy(int n, Rng& rng);

// Canonical key of the ordered merge sequence, ignoring durations.
std::string ranked_topology(const Genealogy& g);

// Newick with branch lengths (child formation time - parent time), leaves at
// time 0, 12 significant digits.
std::string to_newick(const Genealogy& g, const std::vector<std::string>& labels);
Genealogy from_newick(const std::string& text, const std::vector<std::string>& labels);

// JSON-lines event dump ({"left":..,"right":..,"delta":..} per line).
std::string to_jsonl(const Genealogy& g);
Genealogy from_jsonl(const std::string& text);

}  // namespace coalclust

#endif
