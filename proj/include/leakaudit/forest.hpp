#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "common.hpp"
#include "core.hpp"

namespace leakaudit {

/// Dense row-major matrix of small ordinal integer features.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::size_t width) : width_(width) {}

  static FeatureMatrix from_rows(const std::vector<std::vector<int>>& rows) {
    if (rows.empty()) return FeatureMatrix(0);
    FeatureMatrix m(rows.front().size());
    for (const auto& r : rows) m.push_row(r);
    return m;
  }

  void push_row(std::span<const int> row) {
    if (row.size() != width_) {
      throw Error(ErrorKind::RaggedRows, "row width " + std::to_string(row.size()) + " != " + std::to_string(width_));
    }
    values_.insert(values_.end(), row.begin(), row.end());
  }
  void push_row(const std::vector<int>& row) { push_row(std::span<const int>(row)); }

  std::size_t rows() const noexcept { return width_ == 0 ? 0 : values_.size() / width_; }
  std::size_t width() const noexcept { return width_; }
  std::span<const int> row(std::size_t i) const { return {values_.data() + i * width_, width_}; }
  int at(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }

 private:
  std::size_t width_ = 0;
  std::vector<int> values_;
};

struct MaxFeatures {
  enum class Kind { Sqrt, All, Fixed };
  Kind kind = Kind::Sqrt;
  std::size_t k = 0;

  static MaxFeatures sqrt() { return {Kind::Sqrt, 0}; }
  static MaxFeatures all() { return {Kind::All, 0}; }
  static MaxFeatures fixed(std::size_t k) { return {Kind::Fixed, k}; }

  std::size_t resolve(std::size_t n_features) const {
    std::size_t v = n_features;
    if (kind == Kind::Sqrt) v = static_cast<std::size_t>(std::sqrt(static_cast<double>(n_features)));
    if (kind == Kind::Fixed) v = k;
    return std::clamp<std::size_t>(v, 1, std::max<std::size_t>(n_features, 1));
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::Sqrt: return "sqrt";
      case Kind::All: return "all";
      case Kind::Fixed: return std::to_string(k);
    }
    return "sqrt";
  }
  static MaxFeatures parse(std::string_view s) {
    if (s == "sqrt") return sqrt();
    if (s == "all") return all();
    const auto v = parse_u64(s);
    if (!v || *v == 0) throw Error(ErrorKind::InvalidArgument, "max_features must be sqrt, all, or a positive integer");
    return fixed(*v);
  }
  bool operator==(const MaxFeatures&) const = default;
};

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 25;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  MaxFeatures max_features = MaxFeatures::sqrt();
  bool bootstrap = true;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: hardware concurrency; does not affect results

  void check() const {
    if (n_trees < 1) throw Error(ErrorKind::InvalidArgument, "n_trees must be >= 1");
    if (max_depth < 1) throw Error(ErrorKind::InvalidArgument, "max_depth must be >= 1");
    if (min_samples_split < 2) throw Error(ErrorKind::InvalidArgument, "min_samples_split must be >= 2");
    if (min_samples_leaf < 1) throw Error(ErrorKind::InvalidArgument, "min_samples_leaf must be >= 1");
  }

  json to_json() const {
    return json{{"n_trees", n_trees},
                {"max_depth", max_depth},
                {"min_samples_split", min_samples_split},
                {"min_samples_leaf", min_samples_leaf},
                {"max_features", max_features.to_string()},
                {"bootstrap", bootstrap},
                {"seed", seed}};
  }
  static ForestConfig from_json(const json& j) {
    ForestConfig c;
    c.n_trees = j.at("n_trees").get<std::size_t>();
    c.max_depth = j.at("max_depth").get<std::size_t>();
    c.min_samples_split = j.at("min_samples_split").get<std::size_t>();
    c.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
    c.max_features = MaxFeatures::parse(j.at("max_features").get<std::string>());
    c.bootstrap = j.at("bootstrap").get<bool>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  }
};

/// Internal nodes have feature >= 0; leaves have feature == -1. Every node
/// keeps the (weighted) class counts of the training samples that reached it.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::vector<std::uint64_t> class_counts;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // pre-order, root at 0
  std::size_t n_features = 0;

  /// Index of the leaf reached by `row`.
  std::size_t leaf_for(std::span<const int> row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = static_cast<double>(row[static_cast<std::size_t>(n.feature)]) <= n.threshold ? n.left : n.right;
    }
    return i;
  }

  /// Majority class of the leaf; ties go to the lowest class index.
  std::size_t predict_index(std::span<const int> row) const {
    const auto& counts = nodes[leaf_for(row)].class_counts;
    return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  }

  std::size_t depth() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      best = std::max(best, d[i]);
      if (!nodes[i].is_leaf()) {
        d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
        d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
      }
    }
    return best;
  }

  bool operator==(const DecisionTree&) const = default;
};

namespace detail {

/// Training view: identical feature rows collapsed into one weighted point.
/// CART depends only on per-point class counts, so this is exact.
struct CollapsedRows {
  std::vector<std::vector<int>> values;   // unique rows
  std::vector<std::uint32_t> group_of;    // original row -> unique row
};

inline CollapsedRows collapse_rows(const FeatureMatrix& x) {
  CollapsedRows out;
  std::map<std::vector<int>, std::uint32_t> seen;
  out.group_of.reserve(x.rows());
  std::vector<int> key(x.width());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto r = x.row(i);
    key.assign(r.begin(), r.end());
    auto [it, inserted] = seen.try_emplace(key, static_cast<std::uint32_t>(out.values.size()));
    if (inserted) out.values.push_back(key);
    out.group_of.push_back(it->second);
  }
  return out;
}

struct SplitCandidate {
  bool valid = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  // Maximized objective sum_c(l_c^2)/n_l + sum_c(r_c^2)/n_r, as an exact fraction.
  unsigned __int128 num = 0;
  unsigned __int128 den = 1;

  bool better_than(const SplitCandidate& other) const {
    if (!other.valid) return valid;
    return num * other.den > other.num * den;
  }
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<int>>& points, const std::vector<std::vector<std::uint64_t>>& counts,
              std::size_t n_classes, const ForestConfig& config, Rng& rng)
      : points_(points), counts_(counts), n_classes_(n_classes), config_(config), rng_(rng) {
    n_features_ = points.empty() ? 0 : points.front().size();
    max_features_ = config.max_features.resolve(n_features_);
  }

  DecisionTree build(std::vector<std::uint32_t> members) {
    DecisionTree tree;
    tree.n_features = n_features_;
    tree_ = &tree;
    grow(members, 0);
    return tree;
  }

 private:
  static std::uint64_t sum(const std::vector<std::uint64_t>& v) {
    return std::accumulate(v.begin(), v.end(), std::uint64_t{0});
  }
  static unsigned __int128 sum_sq(const std::vector<std::uint64_t>& v) {
    unsigned __int128 s = 0;
    for (auto c : v) s += static_cast<unsigned __int128>(c) * c;
    return s;
  }

  std::int32_t grow(std::vector<std::uint32_t>& members, std::size_t depth) {
    std::vector<std::uint64_t> node_counts(n_classes_, 0);
    for (auto m : members) {
      for (std::size_t c = 0; c < n_classes_; ++c) node_counts[c] += counts_[m][c];
    }
    const std::uint64_t n = sum(node_counts);
    const auto index = static_cast<std::int32_t>(tree_->nodes.size());
    tree_->nodes.push_back(TreeNode{-1, 0.0, -1, -1, node_counts});

    const bool pure = std::count_if(node_counts.begin(), node_counts.end(), [](auto c) { return c > 0; }) <= 1;
    if (pure || depth >= config_.max_depth || n < config_.min_samples_split || n < 2 * config_.min_samples_leaf) {
      return index;
    }
    const SplitCandidate best = find_split(members);
    if (!best.valid) return index;

    std::vector<std::uint32_t> left, right;
    for (auto m : members) {
      (static_cast<double>(points_[m][best.feature]) <= best.threshold ? left : right).push_back(m);
    }
    tree_->nodes[static_cast<std::size_t>(index)].feature = static_cast<int>(best.feature);
    tree_->nodes[static_cast<std::size_t>(index)].threshold = best.threshold;
    const auto l = grow(left, depth + 1);
    tree_->nodes[static_cast<std::size_t>(index)].left = l;
    const auto r = grow(right, depth + 1);
    tree_->nodes[static_cast<std::size_t>(index)].right = r;
    return index;
  }

  // Features are visited in a random order until at least max_features have
  // been inspected and one of them admits a valid split. Among the inspected
  // features the best objective wins; ties go to the lowest feature index,
  // then the lowest threshold.
  SplitCandidate find_split(std::vector<std::uint32_t>& members) {
    std::vector<std::size_t> order(n_features_);
    std::iota(order.begin(), order.end(), 0);
    if (max_features_ < n_features_) rng_.shuffle(order.begin(), order.end());

    std::vector<SplitCandidate> per_feature;
    std::size_t inspected = 0;
    bool found = false;
    for (std::size_t f : order) {
      if (inspected >= max_features_ && found) break;
      ++inspected;
      SplitCandidate c = best_for_feature(members, f);
      if (c.valid) {
        found = true;
        per_feature.push_back(c);
      }
    }
    std::sort(per_feature.begin(), per_feature.end(),
              [](const SplitCandidate& a, const SplitCandidate& b) { return a.feature < b.feature; });
    SplitCandidate best;
    for (const auto& c : per_feature) {
      if (c.better_than(best)) best = c;
    }
    return best;
  }

  SplitCandidate best_for_feature(std::vector<std::uint32_t>& members, std::size_t f) const {
    std::sort(members.begin(), members.end(), [&](std::uint32_t a, std::uint32_t b) {
      const int va = points_[a][f];
      const int vb = points_[b][f];
      return va != vb ? va < vb : a < b;
    });
    std::vector<std::uint64_t> total(n_classes_, 0);
    for (auto m : members) {
      for (std::size_t c = 0; c < n_classes_; ++c) total[c] += counts_[m][c];
    }
    const std::uint64_t n = sum(total);
    std::vector<std::uint64_t> left(n_classes_, 0);
    std::uint64_t n_left = 0;
    SplitCandidate best;
    for (std::size_t i = 0; i + 1 < members.size(); ++i) {
      const auto m = members[i];
      for (std::size_t c = 0; c < n_classes_; ++c) left[c] += counts_[m][c];
      n_left += sum(counts_[m]);
      const int v = points_[m][f];
      const int next = points_[members[i + 1]][f];
      if (v == next) continue;
      const std::uint64_t n_right = n - n_left;
      if (n_left < config_.min_samples_leaf || n_right < config_.min_samples_leaf) continue;
      std::vector<std::uint64_t> right(n_classes_);
      for (std::size_t c = 0; c < n_classes_; ++c) right[c] = total[c] - left[c];
      SplitCandidate cand;
      cand.valid = true;
      cand.feature = f;
      cand.threshold = (static_cast<double>(v) + static_cast<double>(next)) / 2.0;
      cand.num = sum_sq(left) * n_right + sum_sq(right) * n_left;
      cand.den = static_cast<unsigned __int128>(n_left) * n_right;
      if (cand.better_than(best)) best = cand;
    }
    return best;
  }

  const std::vector<std::vector<int>>& points_;
  const std::vector<std::vector<std::uint64_t>>& counts_;
  std::size_t n_classes_;
  const ForestConfig& config_;
  Rng& rng_;
  std::size_t n_features_ = 0;
  std::size_t max_features_ = 1;
  DecisionTree* tree_ = nullptr;
};

inline void check_inputs(const FeatureMatrix& x, std::span<const std::size_t> y, std::size_t n_classes) {
  if (x.rows() == 0 || y.empty()) throw Error(ErrorKind::EmptyInput, "no training rows");
  if (x.rows() != y.size()) {
    throw Error(ErrorKind::RaggedRows, std::to_string(x.rows()) + " rows but " + std::to_string(y.size()) + " labels");
  }
  if (x.width() == 0) throw Error(ErrorKind::RaggedRows, "rows have no features");
  for (auto label : y) {
    if (label >= n_classes) throw Error(ErrorKind::UnknownLabel, "class index out of range");
  }
}

// Bootstrap multiplicities (or all ones) aggregated per unique row.
inline DecisionTree fit_one(const CollapsedRows& rows, std::span<const std::size_t> y, std::size_t n_classes,
                            const ForestConfig& config, std::uint64_t tree_seed) {
  Rng rng(tree_seed);
  std::vector<std::vector<std::uint64_t>> counts(rows.values.size(), std::vector<std::uint64_t>(n_classes, 0));
  const std::size_t n = y.size();
  if (config.bootstrap) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto pick = static_cast<std::size_t>(rng.below(n));
      ++counts[rows.group_of[pick]][y[pick]];
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) ++counts[rows.group_of[i]][y[i]];
  }
  std::vector<std::uint32_t> members;
  for (std::uint32_t g = 0; g < counts.size(); ++g) {
    if (std::any_of(counts[g].begin(), counts[g].end(), [](auto c) { return c > 0; })) members.push_back(g);
  }
  TreeBuilder builder(rows.values, counts, n_classes, config, rng);
  return builder.build(std::move(members));
}

}  // namespace detail

/// Greedy CART on Gini impurity over every row of `x` (no resampling).
/// Feature subsampling follows `config.max_features` with an RNG seeded by
/// `config.seed`.
inline DecisionTree fit_tree(const FeatureMatrix& x, std::span<const std::size_t> y, std::size_t n_classes,
                             const ForestConfig& config) {
  config.check();
  detail::check_inputs(x, y, n_classes);
  ForestConfig no_bootstrap = config;
  no_bootstrap.bootstrap = false;
  return detail::fit_one(detail::collapse_rows(x), y, n_classes, no_bootstrap, config.seed);
}

class ForestModel {
 public:
  ForestModel() = default;
  ForestModel(std::vector<DecisionTree> trees, ForestConfig config, LabelSet labels, std::size_t n_features)
      : trees_(std::move(trees)), config_(config), labels_(std::move(labels)), n_features_(n_features) {}

  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  const ForestConfig& config() const noexcept { return config_; }
  const LabelSet& labels() const noexcept { return labels_; }
  std::size_t n_features() const noexcept { return n_features_; }

  /// Hard majority vote over trees; ties go to the earliest label.
  std::size_t predict_index(std::span<const int> row) const {
    if (row.size() != n_features_) {
      throw Error(ErrorKind::WidthMismatch,
                  "row width " + std::to_string(row.size()) + ", model expects " + std::to_string(n_features_));
    }
    std::vector<std::size_t> votes(labels_.size(), 0);
    for (const auto& t : trees_) ++votes[t.predict_index(row)];
    return static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }

  std::vector<std::size_t> predict_indices(const FeatureMatrix& x) const {
    if (x.rows() > 0 && x.width() != n_features_) {
      throw Error(ErrorKind::WidthMismatch,
                  "row width " + std::to_string(x.width()) + ", model expects " + std::to_string(n_features_));
    }
    // Identical rows get identical predictions; evaluate each once.
    const auto collapsed = detail::collapse_rows(x);
    std::vector<std::size_t> per_group(collapsed.values.size());
    for (std::size_t g = 0; g < per_group.size(); ++g) per_group[g] = predict_index(collapsed.values[g]);
    std::vector<std::size_t> out(x.rows());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = per_group[collapsed.group_of[i]];
    return out;
  }

  std::vector<std::string> predict(const FeatureMatrix& x) const {
    std::vector<std::string> out;
    for (auto i : predict_indices(x)) out.push_back(labels_[i]);
    return out;
  }

  json to_json() const {
    json trees = json::array();
    for (const auto& t : trees_) {
      json nodes = json::array();
      for (const auto& n : t.nodes) {
        nodes.push_back(json{{"feature", n.feature},
                             {"threshold", n.threshold},
                             {"left", n.left},
                             {"right", n.right},
                             {"counts", n.class_counts}});
      }
      trees.push_back(json{{"nodes", std::move(nodes)}});
    }
    return json{{"format", "leakaudit.forest"},
                {"version", 1},
                {"config", config_.to_json()},
                {"labels", labels_.labels()},
                {"n_features", n_features_},
                {"trees", std::move(trees)}};
  }

  static ForestModel from_json(const json& j) {
    if (j.value("format", "") != "leakaudit.forest" || j.value("version", 0) != 1) {
      throw Error(ErrorKind::Schema, "not a version 1 forest model");
    }
    std::vector<DecisionTree> trees;
    const auto n_features = j.at("n_features").get<std::size_t>();
    for (const auto& jt : j.at("trees")) {
      DecisionTree t;
      t.n_features = n_features;
      for (const auto& jn : jt.at("nodes")) {
        t.nodes.push_back(TreeNode{jn.at("feature").get<int>(), jn.at("threshold").get<double>(),
                                   jn.at("left").get<std::int32_t>(), jn.at("right").get<std::int32_t>(),
                                   jn.at("counts").get<std::vector<std::uint64_t>>()});
      }
      trees.push_back(std::move(t));
    }
    return ForestModel(std::move(trees), ForestConfig::from_json(j.at("config")),
                       LabelSet(j.at("labels").get<std::vector<std::string>>()), n_features);
  }

 private:
  std::vector<DecisionTree> trees_;
  ForestConfig config_;
  LabelSet labels_;
  std::size_t n_features_ = 0;
};

/// Random forest: tree i trains on a bootstrap resample drawn from its own
/// RNG stream derive_seed(seed, i). Results do not depend on `threads`.
inline ForestModel fit_forest(const FeatureMatrix& x, std::span<const std::size_t> y, const LabelSet& labels,
                              const ForestConfig& config) {
  config.check();
  detail::check_inputs(x, y, labels.size());
  const auto collapsed = detail::collapse_rows(x);
  std::vector<DecisionTree> trees(config.n_trees);
  unsigned workers = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, config.n_trees));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < config.n_trees; i = next++) {
      trees[i] = detail::fit_one(collapsed, y, labels.size(), config, derive_seed(config.seed, i));
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return ForestModel(std::move(trees), config, labels, x.width());
}

// ---------------------------------------------------------------------------
// Stratified random baseline

/// Predicts each class at its training-set relative frequency.
class StratifiedBaseline {
 public:
  explicit StratifiedBaseline(const LabelDistribution& train) : labels_(train.labels) {
    const auto total = train.total();
    if (total == 0) throw Error(ErrorKind::EmptyDistribution, "training distribution is empty");
    for (auto c : train.counts) probs_.push_back(static_cast<double>(c) / static_cast<double>(total));
  }

  const LabelSet& labels() const noexcept { return labels_; }
  const std::vector<double>& probabilities() const noexcept { return probs_; }

  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t last_nonzero = 0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
      if (probs_[i] <= 0.0) continue;
      last_nonzero = i;
      acc += probs_[i];
      if (u < acc) return i;
    }
    return last_nonzero;
  }

 private:
  LabelSet labels_;
  std::vector<double> probs_;
};

namespace detail {
inline void check_distributions(const LabelDistribution& train, const LabelDistribution& test) {
  if (train.total() == 0 || test.total() == 0) throw Error(ErrorKind::EmptyDistribution, "empty label distribution");
  if (!(train.labels == test.labels)) {
    throw Error(ErrorKind::InvalidArgument, "train and test distributions use different label sets");
  }
}
}  // namespace detail

/// Limit of the stratified baseline's macro F1 as the test set grows: with
/// predicted rate p and true rate q, F1 = 2pq/(p+q). Averaged over classes
/// that are predicted or present (p + q > 0).
inline double baseline_expected_macro_f1(const LabelDistribution& train, const LabelDistribution& test) {
  detail::check_distributions(train, test);
  const double nt = static_cast<double>(train.total());
  const double ns = static_cast<double>(test.total());
  double sum = 0.0;
  std::size_t classes = 0;
  for (std::size_t c = 0; c < train.counts.size(); ++c) {
    const double p = static_cast<double>(train.counts[c]) / nt;
    const double q = static_cast<double>(test.counts[c]) / ns;
    if (p + q == 0.0) continue;
    sum += 2.0 * p * q / (p + q);
    ++classes;
  }
  return sum / static_cast<double>(classes);
}

/// Monte-Carlo estimate: `draws` independent (gold, prediction) pairs with
/// gold ~ test distribution and prediction ~ train distribution.
inline double baseline_monte_carlo_macro_f1(const LabelDistribution& train, const LabelDistribution& test,
                                            std::size_t draws, std::uint64_t seed) {
  detail::check_distributions(train, test);
  const StratifiedBaseline predictor(train);
  const StratifiedBaseline gold_source(test);
  Rng rng(seed);
  const std::size_t k = train.labels.size();
  std::vector<double> tp(k, 0), fp(k, 0), fn(k, 0);
  for (std::size_t i = 0; i < draws; ++i) {
    const auto g = gold_source.draw(rng);
    const auto p = predictor.draw(rng);
    if (g == p) {
      ++tp[g];
    } else {
      ++fp[p];
      ++fn[g];
    }
  }
  double sum = 0.0;
  std::size_t classes = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (tp[c] + fp[c] + fn[c] == 0) continue;
    sum += 2 * tp[c] / (2 * tp[c] + fp[c] + fn[c]);
    ++classes;
  }
  return classes ? sum / static_cast<double>(classes) : 0.0;
}

}  // namespace leakaudit
