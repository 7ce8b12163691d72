#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace leakaudit;

namespace {

RebalanceOptions fast(std::uint64_t seed = 1) {
  RebalanceOptions o;
  o.seed = seed;
  o.forest.n_trees = 30;
  return o;
}

std::multiset<std::int64_t> label_times(const Dataset& d, const std::string& label) {
  std::multiset<std::int64_t> out;
  for (const auto& r : d.records) {
    if (r.label == label) out.insert(*snowflake::timestamp_or_null(r.id));
  }
  return out;
}

}  // namespace

TEST(Rebalance, PerfectTimeMatchedPool) {
  // Pool holds, per non-anchor label, a record at exactly each anchor time.
  const auto d = fixtures::leaky_dataset(11, 800);
  std::vector<std::int64_t> anchors;
  for (const auto& r : d.records) {
    if (r.label == "true") anchors.push_back(*r.timestamp_ms);
  }
  std::vector<Record> pool_records;
  std::uint64_t low = 1;
  for (const auto& label : d.label_set.labels()) {
    if (label == "true") continue;
    for (auto ts : anchors) {
      pool_records.push_back(fixtures::rec(std::to_string(snowflake::make_id(ts, low++ % (1u << 22))), "pool text", label));
    }
  }
  const auto pool = fixtures::make_dataset(pool_records, d.label_set.labels(), "pool");
  auto opt = fast();
  const auto res = time_rebalance(d, pool, "true", opt);
  EXPECT_EQ(res.report.replaced, 600u);
  EXPECT_TRUE(res.report.rejected_ids.empty());
  EXPECT_EQ(res.report.max_abs_delta_ms, 0);
  const auto anchor_set = label_times(res.dataset, "true");
  for (const auto& label : {"false", "unverified", "non-rumor"}) EXPECT_EQ(label_times(res.dataset, label), anchor_set);
  EXPECT_DOUBLE_EQ(res.report.histogram_distance_after, 0.0);
  EXPECT_GT(res.report.histogram_distance_before, 0.0);
  ASSERT_TRUE(res.report.leak_before && res.report.leak_after);
  EXPECT_LT(res.report.leak_after->leakage_score, res.report.leak_before->leakage_score);
}

TEST(Rebalance, ZeroWindowRejectsEverything) {
  const auto d = fixtures::leaky_dataset(12, 400);
  const auto pool = fixtures::time_broad_pool(d, "true", 200, fixtures::kBase2015 + 400 * kDayMs, 30 * kDayMs, 3);
  auto opt = fast();
  opt.window_ms = 0;
  opt.measure_leakage = false;
  const auto res = time_rebalance(d, pool, "true", opt);
  EXPECT_EQ(res.report.replaced, 0u);
  EXPECT_EQ(res.report.rejected_ids.size(), 300u);
  EXPECT_EQ(res.dataset.records.size(), d.records.size());
  for (std::size_t i = 0; i < d.records.size(); ++i) EXPECT_EQ(res.dataset.records[i].id, d.records[i].id);
  EXPECT_FALSE(res.report.leak_before.has_value());
}

TEST(Rebalance, AnchorsUntouchedAndPoolUsedOnce) {
  const auto d = fixtures::leaky_dataset(13, 800);
  const auto pool =
      fixtures::time_broad_pool(d, "true", 1500, fixtures::kBase2015 - 30 * kDayMs, 90 * kDayMs, 4);
  auto opt = fast();
  opt.measure_leakage = false;
  const auto res = time_rebalance(d, pool, "true", opt);
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    if (d.records[i].label == "true") ASSERT_EQ(res.dataset.records[i].id, d.records[i].id);
    ASSERT_EQ(res.dataset.records[i].label, d.records[i].label);
  }
  std::set<std::string> used;
  for (const auto& [orig, repl] : res.report.replacements) ASSERT_TRUE(used.insert(repl).second);
  EXPECT_TRUE(validate(res.dataset).empty());
  EXPECT_LE(res.report.max_abs_delta_ms, opt.window_ms);
  EXPECT_EQ(res.report.replaced + res.report.rejected_ids.size(), 600u);
}

TEST(Rebalance, DeterministicForSeed) {
  const auto d = fixtures::leaky_dataset(14, 400);
  const auto pool = fixtures::time_broad_pool(d, "true", 600, fixtures::kBase2015, 60 * kDayMs, 5);
  auto opt = fast(9);
  opt.measure_leakage = false;
  const auto a = time_rebalance(d, pool, "true", opt);
  const auto b = time_rebalance(d, pool, "true", opt);
  EXPECT_EQ(a.report.to_json().dump(), b.report.to_json().dump());
}

TEST(Rebalance, BroadPoolDropsVerdict) {
  const auto d = fixtures::leaky_dataset(15, 1200);
  const auto pool =
      fixtures::time_broad_pool(d, "true", 3000, fixtures::kBase2015 - 15 * kDayMs, 60 * kDayMs, 6);
  const auto res = time_rebalance(d, pool, "true", fast(2));
  ASSERT_TRUE(res.report.leak_before && res.report.leak_after);
  EXPECT_EQ(res.report.leak_before->verdict, Verdict::Severe);
  EXPECT_LT(res.report.leak_after->leakage_score, 0.15);
  EXPECT_LT(res.report.leak_after->leakage_score, res.report.leak_before->leakage_score);
  EXPECT_LT(res.report.histogram_distance_after, res.report.histogram_distance_before);
}

TEST(Rebalance, Errors) {
  const auto d = fixtures::leaky_dataset(16, 100);
  const auto empty_pool = fixtures::make_dataset({}, d.label_set.labels());
  try {
    time_rebalance(d, empty_pool, "true", fast());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyPool);
  }
  const auto pool = fixtures::time_broad_pool(d, "true", 10, fixtures::kBase2015, kDayMs, 1);
  try {
    time_rebalance(d, pool, "satire", fast());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoAnchorRecords);
  }
  // anchor label present but only short ids
  auto shorty = d;
  for (auto& r : shorty.records) {
    if (r.label == "true") r.id = "5" + std::to_string(&r - shorty.records.data());
  }
  try {
    time_rebalance(shorty, pool, "true", fast());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoAnchorRecords);
  }
}
