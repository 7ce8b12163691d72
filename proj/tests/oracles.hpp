#pragma once

// Brute-force references shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <leakaudit/leakaudit.hpp>

namespace oracles {

using namespace leakaudit;


// Reduced rational, small magnitudes only.
struct Frac {
  std::int64_t n = 0, d = 1;
  static Frac make(std::int64_t n, std::int64_t d) {
    const auto g = std::gcd(n, d);
    return {n / g, d / g};
  }
  Frac operator+(Frac o) const { return make(n * o.d + o.n * d, d * o.d); }
  Frac operator-(Frac o) const { return make(n * o.d - o.n * d, d * o.d); }
  Frac operator*(Frac o) const { return make(n * o.n, d * o.d); }
  bool operator<(Frac o) const { return n * o.d < o.n * d; }
  bool operator==(Frac o) const { return n == o.n && d == o.d; }
};

inline Frac gini(const std::vector<std::int64_t>& counts) {
  const auto n = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
  Frac g{1, 1};
  for (auto c : counts) g = g - Frac::make(c * c, n * n);
  return g;
}

struct Best {
  bool valid = false;
  std::size_t feature = 0;
  double threshold = 0;
  Frac impurity;
};

// Exhaustive search: weighted child Gini over every (feature, midpoint) pair;
// ties to the lowest feature, then the lowest threshold.
inline Best brute_force(const std::vector<std::vector<int>>& x, const std::vector<std::size_t>& y,
                 const std::vector<std::size_t>& members, std::size_t n_classes, std::size_t min_leaf) {
  Best best;
  const auto n = static_cast<std::int64_t>(members.size());
  for (std::size_t f = 0; f < x.front().size(); ++f) {
    std::set<int> values;
    for (auto m : members) values.insert(x[m][f]);
    for (auto it = values.begin(); std::next(it) != values.end(); ++it) {
      const double thr = (*it + *std::next(it)) / 2.0;
      std::vector<std::int64_t> l(n_classes, 0), r(n_classes, 0);
      for (auto m : members) (x[m][f] <= thr ? l : r)[y[m]]++;
      const auto nl = std::accumulate(l.begin(), l.end(), std::int64_t{0});
      const auto nr = n - nl;
      if (nl < static_cast<std::int64_t>(min_leaf) || nr < static_cast<std::int64_t>(min_leaf)) continue;
      const Frac imp = Frac::make(nl, n) * gini(l) + Frac::make(nr, n) * gini(r);
      if (!best.valid || imp < best.impurity) best = {true, f, thr, imp};
    }
  }
  return best;
}

struct Case {
  std::vector<std::vector<int>> x;
  std::vector<std::size_t> y;
  std::size_t n_classes;
};

inline Case random_case(Rng& rng) {
  Case c;
  const auto rows = 1 + rng.below(8);
  const auto width = 1 + rng.below(2);
  c.n_classes = 1 + rng.below(3);
  const auto range = 1 + rng.below(4);
  for (std::uint64_t i = 0; i < rows; ++i) {
    std::vector<int> r;
    for (std::uint64_t f = 0; f < width; ++f) r.push_back(static_cast<int>(rng.below(range)));
    c.x.push_back(r);
    c.y.push_back(rng.below(c.n_classes));
  }
  return c;
}

/// True when every node's counts and split match the exhaustive search.
inline bool tree_matches(const Case& c, const DecisionTree& tree, const ForestConfig& cfg, std::string* why = nullptr) {
  auto fail = [&](std::size_t node, const char* what) {
    if (why) *why = "node " + std::to_string(node) + ": " + what;
    return false;
  };
  struct Item {
    std::size_t node;
    std::vector<std::size_t> members;
    std::size_t depth;
  };
  std::vector<std::size_t> all(c.y.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<Item> stack{{0, all, 0}};
  while (!stack.empty()) {
    auto [node, members, depth] = stack.back();
    stack.pop_back();
    const auto& nd = tree.nodes[node];
    std::vector<std::uint64_t> counts(c.n_classes, 0);
    for (auto m : members) ++counts[c.y[m]];
    if (nd.class_counts != counts) return fail(node, "class counts");
    const bool pure = std::count_if(counts.begin(), counts.end(), [](auto v) { return v > 0; }) <= 1;
    const auto expect = brute_force(c.x, c.y, members, c.n_classes, cfg.min_samples_leaf);
    const bool may_split = !pure && depth < cfg.max_depth && members.size() >= cfg.min_samples_split;
    if (!may_split || !expect.valid) {
      if (!nd.is_leaf()) return fail(node, "expected leaf");
      continue;
    }
    if (nd.is_leaf()) return fail(node, "expected split");
    if (static_cast<std::size_t>(nd.feature) != expect.feature) return fail(node, "feature");
    if (nd.threshold != expect.threshold) return fail(node, "threshold");
    std::vector<std::size_t> l, r;
    for (auto m : members) (c.x[m][expect.feature] <= expect.threshold ? l : r).push_back(m);
    stack.push_back({static_cast<std::size_t>(nd.left), l, depth + 1});
    stack.push_back({static_cast<std::size_t>(nd.right), r, depth + 1});
  }
  return true;
}

}  // namespace oracles
