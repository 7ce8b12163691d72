#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"

using namespace leakaudit;

namespace {

Dataset balanced(std::size_t per_label, std::vector<std::string> labels) {
  std::vector<Record> rs;
  std::size_t id = 1000;
  for (std::size_t i = 0; i < per_label; ++i) {
    for (const auto& l : labels) rs.push_back(fixtures::rec(std::to_string(id++), "t", l));
  }
  return fixtures::make_dataset(std::move(rs), std::move(labels));
}

std::size_t count_label(const Dataset& d, const std::vector<std::string>& ids, const std::string& label) {
  const auto index = index_ids(d);
  std::size_t n = 0;
  for (const auto& id : ids) n += d.records[index.at(id)].label == label;
  return n;
}

// PHEME-like: 9 events of decreasing size, 4 labels, reply counts 0..9,
// article ids (10 tweets each) and an organizer split field.

}  // namespace

TEST(Apportion, LargestRemainder) {
  EXPECT_EQ(detail::apportion(100, {0.7, 0.1, 0.2}), (std::array<std::size_t, 3>{70, 10, 20}));
  EXPECT_EQ(detail::apportion(7, {0.7, 0.1, 0.2}), (std::array<std::size_t, 3>{5, 1, 1}));
  EXPECT_EQ(detail::apportion(1, {0.5, 0.0, 0.5}), (std::array<std::size_t, 3>{1, 0, 0}));
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const double a = rng.uniform(), b = rng.uniform() * (1 - a);
    const std::array<double, 3> r{a, b, 1 - a - b};
    const auto n = rng.below(1000);
    const auto s = detail::apportion(n, r);
    ASSERT_EQ(s[0] + s[1] + s[2], n);
    for (int p = 0; p < 3; ++p) ASSERT_LT(std::abs(static_cast<double>(s[p]) - n * r[p]), 1.0 + 1e-9);
  }
}

TEST(RandomSplit, StratifiedExact) {
  const auto d = balanced(50, {"a", "b"});
  SplitSpec spec;
  spec.seed = 3;
  const auto s = random_split(d, spec);
  EXPECT_EQ(s.train_ids.size(), 70u);
  EXPECT_EQ(s.dev_ids.size(), 10u);
  EXPECT_EQ(s.test_ids.size(), 20u);
  EXPECT_EQ(count_label(d, s.train_ids, "a"), 35u);
  EXPECT_EQ(count_label(d, s.dev_ids, "b"), 5u);
  EXPECT_EQ(count_label(d, s.test_ids, "a"), 10u);
  EXPECT_TRUE(check_split(s, d).empty());
}

TEST(RandomSplit, DeterministicAndSeedSensitive) {
  const auto d = balanced(40, {"a", "b", "c"});
  SplitSpec spec;
  spec.seed = 9;
  EXPECT_EQ(split_file_contents(random_split(d, spec)), split_file_contents(random_split(d, spec)));
  auto other = spec;
  other.seed = 10;
  EXPECT_FALSE(random_split(d, spec).same_partitions(random_split(d, other)));
}

TEST(RandomSplit, PerLabelDeviationAtMostOne) {
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    std::vector<Record> rs;
    for (std::uint64_t i = 0, n = 1 + rng.below(300); i < n; ++i) {
      rs.push_back(fixtures::rec(std::to_string(i + 1), "", fixtures::kFourLabels[rng.below(4)]));
    }
    const auto d = fixtures::make_dataset(rs, fixtures::kFourLabels);
    SplitSpec spec;
    spec.seed = rng.next();
    const double a = 0.5 + 0.4 * rng.uniform();
    spec.ratios = {a, (1 - a) / 3, 2 * (1 - a) / 3};
    const auto s = random_split(d, spec);
    ASSERT_EQ(s.size(), d.size());
    const auto dist = label_distribution(d);
    for (const auto& l : fixtures::kFourLabels) {
      for (auto p : {Partition::Train, Partition::Dev, Partition::Test}) {
        const double exact = dist.count(l) * spec.ratios[static_cast<std::size_t>(p)];
        ASSERT_LE(std::abs(count_label(d, s.part(p), l) - exact), 1.0 + 1e-9);
      }
    }
  }
}

TEST(RandomSplit, FakeNewsNetRatios) {
  const auto d = balanced(200, {"real", "fake"});
  SplitSpec spec;
  spec.ratios = {0.75, 0.10, 0.15};
  spec.stratify = false;
  const auto s = random_split(d, spec);
  EXPECT_NEAR(static_cast<double>(s.train_ids.size()), 300, 1);
  EXPECT_NEAR(static_cast<double>(s.dev_ids.size()), 40, 1);
  EXPECT_NEAR(static_cast<double>(s.test_ids.size()), 60, 1);
}

TEST(RandomSplit, Errors) {
  SplitSpec spec;
  EXPECT_THROW(random_split(fixtures::make_dataset({}, {"a"}), spec), Error);
  spec.ratios = {0.5, 0.5, 0.5};
  try {
    random_split(balanced(3, {"a"}), spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RatioError);
  }
}

TEST(GroupSplit, NoGroupSpansPartitions) {
  std::vector<Record> rs;
  for (int a = 0; a < 10; ++a) {
    for (int t = 0; t < 10; ++t) {
      auto r = fixtures::rec(std::to_string(a * 100 + t + 1), "", a % 2 ? "real" : "fake");
      r.article_id = "politifact" + std::to_string(a);
      rs.push_back(r);
    }
  }
  const auto d = fixtures::make_dataset(rs, {"real", "fake"});
  SplitSpec spec;
  spec.ratios = {0.75, 0.10, 0.15};
  spec.group_by = "article_id";
  spec.seed = 5;
  const auto s = group_split(d, spec);
  EXPECT_TRUE(check_split(s, d).empty());
  EXPECT_EQ(s.size(), 100u);
  EXPECT_EQ(s.train_ids.size() % 10, 0u);
}

TEST(GroupSplit, ConflictingGroupsFlaggedAndExcluded) {
  std::vector<Record> rs;
  auto add = [&](std::string id, std::string label, std::string art) {
    auto r = fixtures::rec(std::move(id), "", std::move(label));
    r.article_id = std::move(art);
    rs.push_back(r);
  };
  add("1", "real", "politifact14920");
  add("2", "fake", "politifact14920");
  add("3", "real", "politifact14940");
  add("4", "fake", "politifact14940");
  add("5", "real", "politifact1");
  add("6", "real", "politifact1");
  add("7", "fake", "politifact2");
  const auto d = fixtures::make_dataset(rs, {"real", "fake"});
  EXPECT_EQ(find_conflicting_groups(d, "article_id"),
            (std::vector<std::string>{"politifact14920", "politifact14940"}));
  SplitSpec spec;
  spec.group_by = "article_id";
  spec.exclude_conflicting_groups = true;
  const auto s = group_split(d, spec);
  EXPECT_EQ(s.size(), 3u);
  EXPECT_EQ(s.excluded_count, 4u);
  EXPECT_FALSE(s.warnings.empty());
  const auto clean = fixtures::make_dataset({rs[4], rs[5], rs[6]}, {"real", "fake"});
  EXPECT_TRUE(find_conflicting_groups(clean, "article_id").empty());
}

TEST(GroupSplit, SingleGroupWarnsAndMissingFieldThrows) {
  auto a = fixtures::rec("1", "", "x"), b = fixtures::rec("2", "", "x");
  a.article_id = b.article_id = "only";
  SplitSpec spec;
  spec.group_by = "article_id";
  const auto s = group_split(fixtures::make_dataset({a, b}, {"x"}), spec);
  EXPECT_EQ(s.warnings.size(), 1u);
  EXPECT_EQ(s.train_ids.size() + s.dev_ids.size() + s.test_ids.size(), 2u);
  EXPECT_TRUE(s.train_ids.size() == 2 || s.dev_ids.size() == 2 || s.test_ids.size() == 2);
  try {
    group_split(fixtures::make_dataset({fixtures::rec("1", "", "x")}, {"x"}), spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingGroupField);
  }
}

TEST(HoldoutSplit, TestIsExactlyHoldoutEvent) {
  const auto d = fixtures::pheme_like();
  const auto s = event_holdout_split(d, "charliehebdo", 0.1, 7);
  EXPECT_TRUE(check_split(s, d).empty());
  const auto index = index_ids(d);
  for (const auto& id : s.test_ids) ASSERT_EQ(*d.records[index.at(id)].event, "charliehebdo");
  EXPECT_EQ(s.test_ids.size(), 1200u);
  EXPECT_EQ(s.size(), d.size());
  const auto no_dev = event_holdout_split(d, "charliehebdo", 0.0, 7);
  EXPECT_TRUE(no_dev.dev_ids.empty());
  try {
    event_holdout_split(d, "nosuchevent", 0.1, 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownEvent);
  }
}

TEST(QuotaSubsample, FourWayQuotas) {
  const auto d = fixtures::pheme_like();
  const std::map<std::string, std::size_t> q{{"non-rumor", 800}, {"false", 400}, {"true", 600}, {"unverified", 500}};
  const auto sub = quota_subsample(d, q, 3, 11);
  EXPECT_EQ(sub.size(), 2300u);
  const auto dist = label_distribution(sub);
  EXPECT_EQ(dist.as_map(), (std::map<std::string, std::size_t>{
                               {"non-rumor", 800}, {"false", 400}, {"true", 600}, {"unverified", 500}}));
  for (const auto& r : sub.records) ASSERT_GE(*r.reply_count, 3);
  EXPECT_EQ(to_jsonl(sub), to_jsonl(quota_subsample(d, q, 3, 11)));
}

TEST(QuotaSubsample, ZeroQuotaAndShortfall) {
  const auto d = balanced(10, {"a", "b"});
  const auto sub = quota_subsample(d, {{"a", 5}, {"b", 0}}, std::nullopt, 1);
  EXPECT_EQ(sub.label_set.labels(), (std::vector<std::string>{"a"}));
  EXPECT_EQ(sub.size(), 5u);
  try {
    quota_subsample(d, {{"a", 11}, {"b", 12}}, std::nullopt, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientRecords);
    EXPECT_NE(std::string(e.what()).find("a: need 11"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("b: need 12"), std::string::npos);
  }
}

TEST(LabelFilter, SubsetAndIdentity) {
  const auto d = balanced(5, fixtures::kFourLabels);
  const auto tf = label_filter(d, {"false", "true"});
  EXPECT_EQ(tf.size(), 10u);
  EXPECT_EQ(tf.label_set.labels(), (std::vector<std::string>{"true", "false"}));
  EXPECT_EQ(label_filter(d, fixtures::kFourLabels), d);
  EXPECT_THROW(label_filter(d, {"maybe"}), Error);
}

TEST(SplitFiles, ExportImportRoundTrip) {
  const auto d = balanced(20, {"a", "b"});
  SplitSpec spec;
  spec.seed = 12;
  const auto s = random_split(d, spec);
  const auto dir = fixtures::scratch_dir("split_files");
  export_split(s, dir / "s.json");
  const auto back = import_split(dir / "s.json", d);
  EXPECT_TRUE(back.same_partitions(s));
  EXPECT_EQ(back.spec.seed, 12u);
  EXPECT_EQ(split_file_contents(back), split_file_contents(s));
}

TEST(SplitFiles, MissingIdsCounted) {
  const auto d = balanced(20, {"a", "b"});
  Split s;
  s.train_ids = {"1000", "1001", "999999"};
  s.test_ids = {"1002", "888888", "777777"};
  const auto dir = fixtures::scratch_dir("split_missing");
  export_split(s, dir / "s.json");
  const auto back = import_split(dir / "s.json", d);
  EXPECT_EQ(back.missing_count, 3u);
  EXPECT_EQ(back.train_ids, (std::vector<std::string>{"1000", "1001"}));
}

TEST(SplitFiles, DirectoryOfIdLists) {
  const auto d = balanced(3, {"a", "b"});
  const auto dir = fixtures::scratch_dir("split_dir");
  write_file(dir / "train.txt", "1000\n1001\n1002\n");
  write_file(dir / "dev.txt", "1003\n");
  write_file(dir / "test.csv", "id,label\n1004,a\n1005,b\n42,a\n");
  const auto s = import_split(dir, d);
  EXPECT_EQ(s.train_ids.size(), 3u);
  EXPECT_EQ(s.test_ids, (std::vector<std::string>{"1004", "1005"}));
  EXPECT_EQ(s.missing_count, 1u);
}

TEST(SplitFiles, MalformedAndDuplicated) {
  const auto d = balanced(3, {"a"});
  const auto dir = fixtures::scratch_dir("split_bad");
  write_file(dir / "bad.json", "{not json");
  EXPECT_THROW(import_split(dir / "bad.json", d), Error);
  write_file(dir / "dup.json", R"({"train":["1000"],"dev":[],"test":["1000"]})");
  EXPECT_THROW(import_split(dir / "dup.json", d), Error);
  EXPECT_THROW(import_split(dir / "absent.json", d), Error);
}

TEST(Presets, BuiltinMatchesShippedFile) {
  const auto shipped = json::parse(read_file(std::filesystem::path(LEAKAUDIT_SOURCE_DIR) / "presets/presets.json"));
  EXPECT_EQ(shipped, json::parse(kBuiltinPresets));
  const std::vector<std::string> expected{"gossipcop",   "pheme5-3way", "pheme5-lc",    "pheme5-rnr",
                                          "pheme9-4way", "pheme9-tf",   "politifact",   "twitter15",
                                          "twitter15-tf", "twitter16",  "twitter16-tf", "wnut2020"};
  std::vector<std::string> names;
  for (const auto& [n, p] : builtin_presets()) names.push_back(n);
  EXPECT_EQ(names, expected);
}

TEST(Presets, EveryPresetDeterministicAndConsistent) {
  const auto d = fixtures::pheme_like();
  for (const auto& [name, preset] : builtin_presets()) {
    SCOPED_TRACE(name);
    const auto a = apply_preset(d, preset, 2024);
    const auto b = apply_preset(d, preset, 2024);
    EXPECT_EQ(split_file_contents(a), split_file_contents(b));
    EXPECT_TRUE(check_split(a, d).empty());
    EXPECT_GT(a.train_ids.size(), 0u);
    EXPECT_GT(a.test_ids.size(), 0u);
    EXPECT_EQ(a.preset, name);
  }
}

TEST(Presets, Twitter15ShapeAndFourWayQuotas) {
  const auto d = balanced(1000, fixtures::kFourLabels);
  const auto s = apply_preset(d, builtin_presets().at("twitter15"), 1);
  EXPECT_EQ(s.dev_ids.size(), 400u);
  EXPECT_EQ(s.train_ids.size(), 2700u);
  EXPECT_EQ(s.test_ids.size(), 900u);

  const auto p = fixtures::pheme_like();
  const auto four = apply_preset(p, builtin_presets().at("pheme9-4way"), 1);
  EXPECT_EQ(four.size(), 2300u);
  EXPECT_EQ(four.train_ids.size(), 1840u);
  EXPECT_EQ(four.dev_ids.size(), 230u);
  EXPECT_EQ(four.test_ids.size(), 230u);
}

TEST(Presets, Pheme5LcHoldsOutCharlieHebdoWithThreeLabels) {
  const auto d = fixtures::pheme_like();
  const auto s = apply_preset(d, builtin_presets().at("pheme5-lc"), 3);
  const auto index = index_ids(d);
  std::set<std::string> test_events, train_events, labels;
  for (const auto& id : s.test_ids) test_events.insert(*d.records[index.at(id)].event);
  for (const auto& id : s.train_ids) {
    train_events.insert(*d.records[index.at(id)].event);
    labels.insert(d.records[index.at(id)].label);
  }
  EXPECT_EQ(test_events, (std::set<std::string>{"charliehebdo"}));
  EXPECT_EQ(train_events.size(), 4u);
  EXPECT_FALSE(labels.contains("non-rumor"));
}

TEST(Presets, GroupPresetsKeepArticlesTogether) {
  const auto d = fixtures::pheme_like();
  const auto s = apply_preset(d, builtin_presets().at("politifact"), 8);
  EXPECT_TRUE(check_split(s, d).empty());
  const auto index = index_ids(d);
  for (auto p : {Partition::Train, Partition::Dev, Partition::Test}) {
    for (const auto& id : s.part(p)) {
      ASSERT_NE(*d.records[index.at(id)].article_id, "art0");
      ASSERT_NE(*d.records[index.at(id)].article_id, "art1");
    }
  }
}

TEST(Presets, WnutReadsFixedField) {
  const auto d = fixtures::pheme_like();
  const auto s = apply_preset(d, builtin_presets().at("wnut2020"), 0);
  const auto index = index_ids(d);
  for (const auto& id : s.dev_ids) ASSERT_EQ(d.records[index.at(id)].extra.at("split"), "validation");
  EXPECT_EQ(s.size(), d.size());
}

TEST(Presets, ConfigDirOverride) {
  const auto dir = fixtures::scratch_dir("presets_dir");
  write_file(dir / "presets.json", R"({"presets":{"mine":{"ratios":[0.5,0.25,0.25]}}})");
  const auto reg = load_presets(dir);
  ASSERT_EQ(reg.size(), 1u);
  EXPECT_DOUBLE_EQ(reg.at("mine").ratios[0], 0.5);
  EXPECT_EQ(load_presets(std::nullopt).size(), 12u);
}
