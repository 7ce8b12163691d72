#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "core.hpp"
#include "idleak.hpp"
#include "snowflake.hpp"
#include "timestamps.hpp"
#include "split.hpp"

namespace leakaudit {

// ---------------------------------------------------------------------------
// Time rebalancing

struct RebalanceOptions {
  std::int64_t window_ms = 7 * kDayMs;
  std::uint64_t seed = 0;
  bool measure_leakage = true;  // run the ID test before and after
  std::size_t k = 3;
  ForestConfig forest;
  std::array<double, 3> ratios{0.7, 0.1, 0.2};
};

struct RebalanceReport {
  std::string anchor_label;
  std::size_t replaced = 0;
  std::vector<std::string> rejected_ids;  // kept unchanged: no pool record within the window
  std::size_t pool_usable = 0;
  std::size_t pool_skipped = 0;  // undecodable, foreign label, or id already in the dataset
  double mean_abs_delta_ms = 0.0;
  std::int64_t max_abs_delta_ms = 0;
  double histogram_distance_before = 0.0;
  double histogram_distance_after = 0.0;
  std::optional<IdLeakReport> leak_before;
  std::optional<IdLeakReport> leak_after;
  std::vector<std::pair<std::string, std::string>> replacements;  // (original id, pool id)

  json to_json() const {
    json j{{"anchor_label", anchor_label},
           {"replaced", replaced},
           {"rejected", rejected_ids.size()},
           {"rejected_ids", rejected_ids},
           {"pool_usable", pool_usable},
           {"pool_skipped", pool_skipped},
           {"mean_abs_delta_ms", mean_abs_delta_ms},
           {"max_abs_delta_ms", max_abs_delta_ms},
           {"histogram_distance_before", histogram_distance_before},
           {"histogram_distance_after", histogram_distance_after},
           {"toolkit_version", kToolkitVersion}};
    j["leak_before"] = leak_before ? leak_before->to_json() : json(nullptr);
    j["leak_after"] = leak_after ? leak_after->to_json() : json(nullptr);
    json reps = json::array();
    for (const auto& [a, b] : replacements) reps.push_back(json{{"original", a}, {"replacement", b}});
    j["replacements"] = std::move(reps);
    return j;
  }
};

struct RebalanceResult {
  Dataset dataset;
  RebalanceReport report;
};

namespace detail {
inline std::optional<IdLeakReport> measure(const Dataset& d, const RebalanceOptions& opt) {
  SplitSpec spec;
  spec.ratios = opt.ratios;
  spec.seed = derive_seed(opt.seed, 0x7e57);
  ForestConfig cfg = opt.forest;
  cfg.seed = derive_seed(opt.seed, 0xf0e5);
  try {
    return run_id_leak_test(d, random_split(d, spec), opt.k, cfg);
  } catch (const Error&) {
    return std::nullopt;
  }
}
}  // namespace detail

/// Keeps every anchor-label record and replaces each other record with the
/// unused pool record of the same label closest in time to an anchor
/// timestamp. Anchor timestamps are dealt per label from a seeded shuffle
/// (reshuffled when exhausted). Replacements farther than the window are
/// rejected and the original record stays.
inline RebalanceResult time_rebalance(const Dataset& dataset, const Dataset& pool, const std::string& anchor_label,
                                      const RebalanceOptions& opt = {}) {
  if (!dataset.label_set.contains(anchor_label)) {
    throw Error(ErrorKind::NoAnchorRecords, "anchor label '" + anchor_label + "' not in label set");
  }
  std::vector<std::int64_t> anchor_times;
  for (const auto& r : dataset.records) {
    if (r.label != anchor_label) continue;
    if (auto ts = snowflake::timestamp_or_null(r.id)) anchor_times.push_back(*ts);
  }
  if (anchor_times.empty()) {
    throw Error(ErrorKind::NoAnchorRecords, "no '" + anchor_label + "' record with a decodable timestamp");
  }

  const auto dataset_ids = index_ids(dataset);
  RebalanceReport report;
  report.anchor_label = anchor_label;
  // label -> (timestamp, pool index), ordered
  std::map<std::string, std::set<std::pair<std::int64_t, std::size_t>>> available;
  for (std::size_t i = 0; i < pool.records.size(); ++i) {
    const auto& r = pool.records[i];
    const auto ts = snowflake::timestamp_or_null(r.id);
    if (!ts || r.label == anchor_label || !dataset.label_set.contains(r.label) || dataset_ids.contains(r.id)) {
      ++report.pool_skipped;
      continue;
    }
    available[r.label].emplace(*ts, i);
    ++report.pool_usable;
  }
  if (report.pool_usable == 0) throw Error(ErrorKind::EmptyPool, "pool has no usable records");

  Rng rng(opt.seed);
  RebalanceResult result{dataset, {}};
  double delta_sum = 0.0;
  for (const auto& label : dataset.label_set.labels()) {
    if (label == anchor_label) continue;
    std::vector<std::int64_t> deck;
    std::size_t next = 0;
    auto& candidates = available[label];
    for (auto& rec : result.dataset.records) {
      if (rec.label != label) continue;
      if (next == deck.size()) {
        deck = anchor_times;
        rng.shuffle(deck.begin(), deck.end());
        next = 0;
      }
      const std::int64_t target = deck[next++];
      auto best = candidates.end();
      auto it = candidates.lower_bound({target, 0});
      if (it != candidates.end()) best = it;
      if (it != candidates.begin()) {
        auto prev = std::prev(it);
        if (best == candidates.end() || target - prev->first <= best->first - target) best = prev;
      }
      const std::int64_t delta = best == candidates.end() ? -1 : std::llabs(best->first - target);
      if (best == candidates.end() || delta > opt.window_ms) {
        report.rejected_ids.push_back(rec.id);
        continue;
      }
      const Record& replacement = pool.records[best->second];
      report.replacements.emplace_back(rec.id, replacement.id);
      rec = replacement;
      rec.timestamp_ms = best->first;
      candidates.erase(best);
      ++report.replaced;
      delta_sum += static_cast<double>(delta);
      report.max_abs_delta_ms = std::max(report.max_abs_delta_ms, delta);
    }
  }
  report.mean_abs_delta_ms = report.replaced ? delta_sum / static_cast<double>(report.replaced) : 0.0;
  report.histogram_distance_before =
      histogram_distance_to_anchor(timestamp_histogram(dataset), dataset.label_set, anchor_label);
  report.histogram_distance_after =
      histogram_distance_to_anchor(timestamp_histogram(result.dataset), dataset.label_set, anchor_label);
  if (opt.measure_leakage) {
    report.leak_before = detail::measure(dataset, opt);
    report.leak_after = detail::measure(result.dataset, opt);
  }
  result.report = std::move(report);
  return result;
}

}  // namespace leakaudit
