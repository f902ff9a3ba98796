#include "coalclust/genealogy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "coalclust/error.hpp"
#include "coalclust/mathutil.hpp"

namespace coalclust {

namespace {

std::string format_g12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

ValidationReport validate(int n, const std::vector<CoalescentEvent>& events) {
  ValidationReport report;
  if (n < 2) {
    report.errors.push_back("leaf count must be >= 2");
    return report;
  }
  if (static_cast<int>(events.size()) != n - 1) {
    report.errors.push_back("expected " + std::to_string(n - 1) + " events, got " +
                            std::to_string(events.size()));
    return report;
  }
  std::vector<int> used(2 * n - 1, 0);
  for (int i = 0; i < n - 1; ++i) {
    const CoalescentEvent& e = events[i];
    const int self = n + i;
    for (int child : {e.left, e.right}) {
      if (child < 0 || child >= self) {
        report.errors.push_back("event " + std::to_string(i) + " child ref " +
                                std::to_string(child) + " out of range");
        return report;
      }
      if (used[child]) {
        report.errors.push_back("node " + std::to_string(child) +
                                " is a child of two events");
        return report;
      }
      used[child] = 1;
    }
    if (e.left == e.right) {
      report.errors.push_back("event " + std::to_string(i) + " merges a node with itself");
      return report;
    }
    if (!(e.delta >= 0.0) || !std::isfinite(e.delta)) {
      report.errors.push_back("event " + std::to_string(i) + " has invalid duration");
      return report;
    }
    if (e.delta == 0.0) {
      report.warnings.push_back("event " + std::to_string(i) + " has zero duration");
    }
  }
  for (int node = 0; node < 2 * n - 2; ++node) {
    if (!used[node]) {
      report.errors.push_back("node " + std::to_string(node) + " never coalesces");
      return report;
    }
  }
  return report;
}

Genealogy::Genealogy(int n, std::vector<CoalescentEvent> events)
    : n_(n), events_(std::move(events)) {
  ValidationReport report = validate(n_, events_);
  if (!report.ok()) fail(ErrorKind::structural, report.errors.front());
}

double Genealogy::node_time(int node) const {
  if (is_leaf(node)) return 0.0;
  double t = 0.0;
  for (int i = 0; i <= event_of(node); ++i) t -= events_[i].delta;
  return t;
}

std::vector<double> Genealogy::event_times() const {
  std::vector<double> times(events_.size());
  double t = 0.0;
  for (std::size_t i = 0; i < events_.size(); ++i) {
    t -= events_[i].delta;
    times[i] = t;
  }
  return times;
}

std::vector<int> Genealogy::parents() const {
  std::vector<int> parent(node_count(), -1);
  for (std::size_t i = 0; i < events_.size(); ++i) {
    parent[events_[i].left] = n_ + static_cast<int>(i);
    parent[events_[i].right] = n_ + static_cast<int>(i);
  }
  return parent;
}

std::vector<std::vector<int>> Genealogy::leaf_sets() const {
  std::vector<std::vector<int>> sets(node_count());
  for (int leaf = 0; leaf < n_; ++leaf) sets[leaf] = {leaf};
  for (std::size_t i = 0; i < events_.size(); ++i) {
    std::vector<int> merged;
    const auto& l = sets[events_[i].left];
    const auto& r = sets[events_[i].right];
    merged.reserve(l.size() + r.size());
    std::merge(l.begin(), l.end(), r.begin(), r.end(), std::back_inserter(merged));
    sets[n_ + i] = std::move(merged);
  }
  return sets;
}

double log_prior(const Genealogy& g) {
  double lp = 0.0;
  const int n = g.leaf_count();
  for (int i = 1; i <= n - 1; ++i) {
    lp -= pairs_count(n - i + 1) * g.event(i - 1).delta;
  }
  return lp;
}

Genealogy sample_genealogy(int n, Rng& rng) {
  if (n < 2) fail(ErrorKind::argument, "sample_genealogy requires n >= 2");
  std::vector<int> active(n);
  std::iota(active.begin(), active.end(), 0);
  std::vector<CoalescentEvent> events;
  events.reserve(n - 1);
  for (int i = 1; i <= n - 1; ++i) {
    const int m = static_cast<int>(active.size());
    const double delta = rng.exponential(pairs_count(m));
    // Uniform unordered pair: index k in [0, C(m,2)) decoded to (a, b).
    std::uint64_t k = rng.uniform_int(static_cast<std::uint64_t>(pairs_count(m)));
    int a = 0;
    while (k >= static_cast<std::uint64_t>(m - 1 - a)) {
      k -= m - 1 - a;
      ++a;
    }
    const int b = a + 1 + static_cast<int>(k);
    CoalescentEvent e;
    e.left = std::min(active[a], active[b]);
    e.right = std::max(active[a], active[b]);
    e.delta = delta;
    active[a] = n + i - 1;
    active.erase(active.begin() + b);
    events.push_back(e);
  }
  return Genealogy(n, std::move(events));
}

std::string ranked_topology(const Genealogy& g) {
  const int n = g.leaf_count();
  std::vector<std::string> repr(g.node_count());
  std::vector<int> min_leaf(g.node_count());
  for (int leaf = 0; leaf < n; ++leaf) {
    repr[leaf] = std::to_string(leaf);
    min_leaf[leaf] = leaf;
  }
  std::string key;
  for (int i = 0; i < g.event_count(); ++i) {
    int a = g.event(i).left, b = g.event(i).right;
    if (min_leaf[a] > min_leaf[b]) std::swap(a, b);
    const int self = n + i;
    repr[self] = "(" + repr[a] + "," + repr[b] + ")";
    min_leaf[self] = std::min(min_leaf[a], min_leaf[b]);
    if (i > 0) key += "|";
    key += repr[self];
  }
  return key;
}

std::string to_newick(const Genealogy& g, const std::vector<std::string>& labels) {
  if (static_cast<int>(labels.size()) != g.leaf_count()) {
    fail(ErrorKind::argument, "label count does not match leaf count");
  }
  std::vector<double> times(g.node_count(), 0.0);
  const auto event_times = g.event_times();
  for (int i = 0; i < g.event_count(); ++i) times[g.leaf_count() + i] = event_times[i];
  // Iterative build: repr per node with branch length appended by the parent.
  std::vector<std::string> repr(g.node_count());
  for (int leaf = 0; leaf < g.leaf_count(); ++leaf) repr[leaf] = labels[leaf];
  for (int i = 0; i < g.event_count(); ++i) {
    const CoalescentEvent& e = g.event(i);
    const int self = g.leaf_count() + i;
    const std::string bl = "(" + repr[e.left] + ":" +
                           format_g12(times[e.left] - times[self]) + "," + repr[e.right] +
                           ":" + format_g12(times[e.right] - times[self]) + ")";
    repr[self] = bl;
  }
  return repr[g.root()] + ";";
}

namespace {

struct NewickNode {
  int id = -1;                 // leaf index if a leaf
  double branch_length = 0.0;  // to parent
  std::vector<NewickNode> children;
};

class NewickParser {
 public:
  NewickParser(const std::string& text, const std::vector<std::string>& labels)
      : text_(text) {
    for (std::size_t i = 0; i < labels.size(); ++i) label_to_id_[labels[i]] = static_cast<int>(i);
  }

  NewickNode parse() {
    NewickNode root = parse_node();
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != ';') {
      fail(ErrorKind::ingestion, "newick: missing terminating ';'");
    }
    return root;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  NewickNode parse_node() {
    skip_ws();
    NewickNode node;
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      node.children.push_back(parse_node());
      skip_ws();
      while (pos_ < text_.size() && text_[pos_] == ',') {
        ++pos_;
        node.children.push_back(parse_node());
        skip_ws();
      }
      if (pos_ >= text_.size() || text_[pos_] != ')') {
        fail(ErrorKind::ingestion, "newick: missing ')'");
      }
      ++pos_;
    } else {
      std::string name;
      while (pos_ < text_.size() &&
             std::string_view(":,();").find(text_[pos_]) == std::string_view::npos) {
        name += text_[pos_++];
      }
      auto it = label_to_id_.find(name);
      if (it == label_to_id_.end()) fail(ErrorKind::ingestion, "newick: unknown leaf '" + name + "'");
      node.id = it->second;
    }
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == ':') {
      ++pos_;
      std::size_t eaten = 0;
      node.branch_length = std::stod(text_.substr(pos_), &eaten);
      pos_ += eaten;
    }
    return node;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  std::map<std::string, int> label_to_id_;
};

}  // namespace

Genealogy from_newick(const std::string& text, const std::vector<std::string>& labels) {
  NewickParser parser(text, labels);
  NewickNode root = parser.parse();
  // Flatten: collect (time, left_set_root, right_set_root); leaf times are 0,
  // internal times derived from children minus branch length.
  struct Flat {
    double time;
    int index;  // order of discovery
    std::vector<int> child_nodes;
  };
  const int n = static_cast<int>(labels.size());
  std::vector<Flat> internals;
  // DFS assigning times; returns (node time, provisional ref: leaves >= 0,
  // internals encoded as -(index+1)).
  std::function<std::pair<double, int>(const NewickNode&)> walk =
      [&](const NewickNode& node) -> std::pair<double, int> {
    if (node.children.empty()) return {0.0, node.id};
    if (node.children.size() != 2) {
      fail(ErrorKind::ingestion, "newick: tree is not binary");
    }
    auto [tl, rl] = walk(node.children[0]);
    auto [tr, rr] = walk(node.children[1]);
    const double t_from_l = tl - node.children[0].branch_length;
    const double t_from_r = tr - node.children[1].branch_length;
    if (std::abs(t_from_l - t_from_r) > 1e-6 * (1.0 + std::abs(t_from_l))) {
      fail(ErrorKind::ingestion, "newick: branch lengths are not ultrametric");
    }
    Flat f;
    f.time = 0.5 * (t_from_l + t_from_r);
    f.index = static_cast<int>(internals.size());
    f.child_nodes = {rl, rr};
    internals.push_back(f);
    return {f.time, -(f.index + 1)};
  };
  walk(root);
  if (static_cast<int>(internals.size()) != n - 1) {
    fail(ErrorKind::ingestion, "newick: wrong number of internal nodes");
  }
  // Sort internals by time descending (most recent merge first).
  std::vector<int> order(internals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return internals[a].time > internals[b].time;
  });
  std::vector<int> rank(internals.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<int>(i);
  std::vector<CoalescentEvent> events(internals.size());
  double prev_time = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Flat& f = internals[order[i]];
    auto resolve = [&](int ref) {
      return ref >= 0 ? ref : n + rank[-(ref + 1)];
    };
    CoalescentEvent e;
    e.left = std::min(resolve(f.child_nodes[0]), resolve(f.child_nodes[1]));
    e.right = std::max(resolve(f.child_nodes[0]), resolve(f.child_nodes[1]));
    e.delta = prev_time - f.time;
    prev_time = f.time;
    events[i] = e;
  }
  return Genealogy(n, std::move(events));
}

std::string to_jsonl(const Genealogy& g) {
  std::string out;
  for (const CoalescentEvent& e : g.events()) {
    nlohmann::json j{{"left", e.left}, {"right", e.right}, {"delta", e.delta}};
    out += j.dump();
    out += "\n";
  }
  return out;
}

Genealogy from_jsonl(const std::string& text) {
  std::vector<CoalescentEvent> events;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("left") || !j.contains("right") ||
        !j.contains("delta")) {
      fail(ErrorKind::ingestion, "jsonl: bad event line: " + line);
    }
    events.push_back({j["left"].get<int>(), j["right"].get<int>(), j["delta"].get<double>()});
  }
  return Genealogy(static_cast<int>(events.size()) + 1, std::move(events));
}

}  // namespace coalclust
