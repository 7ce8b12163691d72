#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <leakaudit/leakaudit.hpp>

namespace fixtures {

using namespace leakaudit;

inline const std::vector<std::string> kFourLabels{"true", "false", "unverified", "non-rumor"};
inline constexpr std::int64_t kBase2015 = 1420070400000;  // 2015-01-01T00:00:00Z

inline Record rec(std::string id, std::string text, std::string label) {
  Record r;
  r.id = std::move(id);
  r.text = std::move(text);
  r.label = std::move(label);
  r.timestamp_ms = snowflake::timestamp_or_null(r.id);
  return r;
}

inline Dataset make_dataset(std::vector<Record> records, std::vector<std::string> labels, std::string name = "fixture") {
  Dataset d;
  d.records = std::move(records);
  d.label_set = LabelSet(std::move(labels));
  d.name = std::move(name);
  return d;
}

inline std::string filler_text(Rng& rng) {
  static const std::array<std::string_view, 16> words{"breaking", "news", "report", "police", "city",  "says",
                                                      "update",   "video", "people", "today", "world", "story",
                                                      "official", "claim", "photo",  "live"};
  std::string t;
  const auto n = 4 + rng.below(6);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (i) t += ' ';
    t += words[rng.below(words.size())];
  }
  return t;
}

/// Snowflake id for a uniform time in [start, start + span).
inline std::string id_in_window(Rng& rng, std::int64_t start_ms, std::int64_t span_ms) {
  const auto ts = start_ms + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(span_ms)));
  return std::to_string(snowflake::make_id(ts, rng.below(1u << 22)));
}

/// Leaky fixture: each label's ids fall in its own 30-day window; windows
/// are 60 days apart. Text is label-independent.
inline Dataset leaky_dataset(std::uint64_t seed = 7, std::size_t n = 2000) {
  Rng rng(seed);
  std::vector<Record> records;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t li = i % kFourLabels.size();
    std::string id;
    do {
      id = id_in_window(rng, kBase2015 + static_cast<std::int64_t>(li) * 60 * kDayMs, 30 * kDayMs);
    } while (!seen.insert(id).second);
    records.push_back(rec(id, filler_text(rng), kFourLabels[li]));
  }
  return make_dataset(std::move(records), kFourLabels, "leaky");
}

/// Same ids and texts with labels shuffled across records.
inline Dataset permuted_control(const Dataset& d, std::uint64_t seed) {
  Dataset c = d;
  std::vector<std::string> labels;
  for (const auto& r : c.records) labels.push_back(r.label);
  Rng rng(seed);
  rng.shuffle(labels.begin(), labels.end());
  for (std::size_t i = 0; i < labels.size(); ++i) c.records[i].label = labels[i];
  c.name = "control";
  return c;
}

/// Time-broad pool: per non-anchor label, `per_label` records spread over
/// [start, start + span).
inline Dataset time_broad_pool(const Dataset& d, const std::string& anchor, std::size_t per_label,
                               std::int64_t start_ms, std::int64_t span_ms, std::uint64_t seed) {
  Rng rng(seed);
  std::set<std::string> seen;
  for (const auto& r : d.records) seen.insert(r.id);
  std::vector<Record> records;
  for (const auto& label : d.label_set.labels()) {
    if (label == anchor) continue;
    for (std::size_t i = 0; i < per_label; ++i) {
      std::string id;
      do {
        id = id_in_window(rng, start_ms, span_ms);
      } while (!seen.insert(id).second);
      records.push_back(rec(id, filler_text(rng), label));
    }
  }
  return make_dataset(std::move(records), d.label_set.labels(), "pool");
}

/// Nine events of shrinking size, 10 tweets per article, labels by article
/// (art0 and art1 mixed), and an extra "split" field.
inline Dataset pheme_like(std::uint64_t seed = 1) {
  static const std::vector<std::string> events{"charliehebdo", "sydneysiege", "ferguson", "ottawashooting",
                                               "germanwings",  "putinmissing", "prince",   "gurlitt",
                                               "ebola"};
  Rng rng(seed);
  std::vector<Record> rs;
  std::size_t id = 0;
  for (std::size_t e = 0; e < events.size(); ++e) {
    const std::size_t n = 1200 - 120 * e;
    for (std::size_t i = 0; i < n; ++i) {
      auto r = rec(std::to_string(100000 + id++), "x", kFourLabels[rng.below(4)]);
      r.event = events[e];
      r.reply_count = static_cast<std::int64_t>(rng.below(10));
      r.article_id = "art" + std::to_string(rs.size() / 10);
      const auto s = rng.below(10);
      r.extra["split"] = s < 7 ? "train" : s < 8 ? "validation" : "test";
      rs.push_back(std::move(r));
    }
  }
  // Articles must be label-consistent for group presets except two planted conflicts.
  for (auto& r : rs) {
    const auto a = std::stoul(r.article_id->substr(3));
    r.label = kFourLabels[a % 4];
  }
  rs[0].label = "false";  // art0 now mixed
  rs[15].label = "true";  // art1 mixed
  return make_dataset(std::move(rs), kFourLabels, "pheme_like");
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("leakaudit_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace fixtures
