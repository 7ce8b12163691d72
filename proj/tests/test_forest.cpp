#include <gtest/gtest.h>

#include <numeric>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace leakaudit;
using namespace oracles;


TEST(ForestOracle, EverySplitMatchesBruteForceGini) {
  Rng rng(2024);
  ForestConfig cfg;
  cfg.max_features = MaxFeatures::all();
  for (int i = 0; i < 3000; ++i) {
    const auto c = random_case(rng);
    const auto tree = fit_tree(FeatureMatrix::from_rows(c.x), c.y, c.n_classes, cfg);
    std::string why;
    ASSERT_TRUE(tree_matches(c, tree, cfg, &why)) << "case " << i << " " << why;
  }
}

TEST(ForestOracle, DepthAndLeafLimitsRespected) {
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    ForestConfig cfg;
    cfg.max_features = MaxFeatures::all();
    cfg.max_depth = 1 + rng.below(3);
    cfg.min_samples_leaf = 1 + rng.below(3);
    cfg.min_samples_split = 2 + rng.below(3);
    const auto c = random_case(rng);
    const auto tree = fit_tree(FeatureMatrix::from_rows(c.x), c.y, c.n_classes, cfg);
    ASSERT_LE(tree.depth(), cfg.max_depth);
    std::string why;
    ASSERT_TRUE(tree_matches(c, tree, cfg, &why)) << "case " << i << " " << why;
  }
}

TEST(ForestOracle, HandTieBreaksToLowestFeature) {
  // Both features separate perfectly; feature 0 must win.
  const auto x = FeatureMatrix::from_rows({{0, 5}, {1, 6}, {0, 5}, {1, 6}});
  const std::vector<std::size_t> y{0, 1, 0, 1};
  ForestConfig cfg;
  cfg.max_features = MaxFeatures::all();
  const auto t = fit_tree(x, y, 2, cfg);
  EXPECT_EQ(t.nodes[0].feature, 0);
  EXPECT_DOUBLE_EQ(t.nodes[0].threshold, 0.5);
}

TEST(Forest, SeparableDataLearnedPerfectly) {
  std::vector<std::vector<int>> rows;
  std::vector<std::size_t> y;
  for (int a = 0; a < 10; ++a) {
    for (int b = 0; b < 10; ++b) {
      rows.push_back({a, b});
      y.push_back(a < 3 ? 0 : (b < 5 ? 1 : 2));
    }
  }
  ForestConfig cfg;
  cfg.n_trees = 25;
  cfg.seed = 3;
  const auto model = fit_forest(FeatureMatrix::from_rows(rows), y, LabelSet({"x", "y", "z"}), cfg);
  EXPECT_EQ(model.predict_indices(FeatureMatrix::from_rows(rows)), y);
}

TEST(Forest, DeterministicAcrossThreadCounts) {
  Rng rng(5);
  std::vector<std::vector<int>> rows;
  std::vector<std::size_t> y;
  for (int i = 0; i < 500; ++i) {
    rows.push_back({static_cast<int>(rng.below(10)), static_cast<int>(rng.below(10)), static_cast<int>(rng.below(10))});
    y.push_back(rng.below(4));
  }
  const auto x = FeatureMatrix::from_rows(rows);
  const LabelSet labels({"a", "b", "c", "d"});
  ForestConfig cfg;
  cfg.n_trees = 30;
  cfg.seed = 77;
  cfg.threads = 1;
  const auto one = fit_forest(x, y, labels, cfg);
  cfg.threads = 4;
  const auto four = fit_forest(x, y, labels, cfg);
  EXPECT_EQ(one.trees(), four.trees());
  EXPECT_EQ(one.to_json().dump(), four.to_json().dump());
  cfg.seed = 78;
  const auto other = fit_forest(x, y, labels, cfg);
  EXPECT_NE(one.to_json().dump(), other.to_json().dump());
}

TEST(Forest, SerializationRoundTrip) {
  Rng rng(8);
  std::vector<std::vector<int>> rows;
  std::vector<std::size_t> y;
  for (int i = 0; i < 200; ++i) {
    rows.push_back({static_cast<int>(rng.below(10)), static_cast<int>(rng.below(10))});
    y.push_back(rows.back()[0] > 4);
  }
  const auto x = FeatureMatrix::from_rows(rows);
  ForestConfig cfg;
  cfg.n_trees = 10;
  const auto model = fit_forest(x, y, LabelSet({"lo", "hi"}), cfg);
  const auto back = ForestModel::from_json(json::parse(model.to_json().dump()));
  EXPECT_EQ(back.trees(), model.trees());
  EXPECT_EQ(back.predict(x), model.predict(x));
  EXPECT_THROW(ForestModel::from_json(json{{"format", "other"}}), Error);
}

TEST(Forest, WidthMismatchAndBadInputs) {
  const auto x = FeatureMatrix::from_rows({{1, 2}, {3, 4}});
  const std::vector<std::size_t> y{0, 1};
  ForestConfig cfg;
  cfg.n_trees = 3;
  const auto model = fit_forest(x, y, LabelSet({"a", "b"}), cfg);
  const std::vector<int> narrow{1};
  try {
    model.predict_index(narrow);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::WidthMismatch);
  }
  FeatureMatrix m(2);
  EXPECT_THROW(m.push_row(std::vector<int>{1, 2, 3}), Error);
  EXPECT_THROW(fit_forest(x, std::vector<std::size_t>{0}, LabelSet({"a", "b"}), cfg), Error);
  cfg.n_trees = 0;
  EXPECT_THROW(fit_forest(x, y, LabelSet({"a", "b"}), cfg), Error);
}

TEST(Forest, MajorityVoteTieGoesToEarliestLabel) {
  // Two single-leaf trees voting for different classes.
  DecisionTree a, b;
  a.n_features = b.n_features = 1;
  a.nodes.push_back(TreeNode{-1, 0, -1, -1, {0, 5}});
  b.nodes.push_back(TreeNode{-1, 0, -1, -1, {5, 0}});
  ForestModel model({a, b}, ForestConfig{}, LabelSet({"first", "second"}), 1);
  const std::vector<int> row{0};
  EXPECT_EQ(model.predict_index(row), 0u);
}

TEST(MaxFeatures, Resolve) {
  EXPECT_EQ(MaxFeatures::sqrt().resolve(3), 1u);
  EXPECT_EQ(MaxFeatures::sqrt().resolve(9), 3u);
  EXPECT_EQ(MaxFeatures::all().resolve(3), 3u);
  EXPECT_EQ(MaxFeatures::fixed(10).resolve(3), 3u);
  EXPECT_EQ(MaxFeatures::parse("2"), MaxFeatures::fixed(2));
  EXPECT_THROW(MaxFeatures::parse("0"), Error);
}

namespace {
LabelDistribution dist(std::vector<std::size_t> counts) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < counts.size(); ++i) names.push_back("c" + std::to_string(i));
  return LabelDistribution{LabelSet(names), std::move(counts)};
}
}  // namespace

TEST(Baseline, BalancedFourClassIsQuarter) {
  EXPECT_DOUBLE_EQ(baseline_expected_macro_f1(dist({100, 100, 100, 100}), dist({25, 25, 25, 25})), 0.25);
  const double mc = baseline_monte_carlo_macro_f1(dist({100, 100, 100, 100}), dist({25, 25, 25, 25}), 100000, 1);
  EXPECT_NEAR(mc, 0.25, 0.01);
}

TEST(Baseline, BinaryHandValue) {
  // p = (0.75, 0.25), q = (0.5, 0.5): F1 = 2pq/(p+q) -> 0.6 and 1/3.
  EXPECT_NEAR(baseline_expected_macro_f1(dist({3, 1}), dist({1, 1})), (0.6 + 1.0 / 3.0) / 2, 1e-12);
  EXPECT_NEAR(baseline_monte_carlo_macro_f1(dist({3, 1}), dist({1, 1}), 200000, 4), (0.6 + 1.0 / 3.0) / 2, 0.01);
}

TEST(Baseline, EmptyDistributionThrows) {
  try {
    baseline_expected_macro_f1(dist({0, 0}), dist({1, 1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyDistribution);
  }
}

TEST(Baseline, StratifiedDrawFrequencies) {
  const StratifiedBaseline b(dist({1, 0, 3}));
  Rng rng(9);
  std::vector<std::size_t> seen(3, 0);
  for (int i = 0; i < 40000; ++i) ++seen[b.draw(rng)];
  EXPECT_EQ(seen[1], 0u);
  EXPECT_NEAR(seen[0] / 40000.0, 0.25, 0.01);
}
