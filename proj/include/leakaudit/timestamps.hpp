#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>

#include "core.hpp"
#include "csv.hpp"
#include "snowflake.hpp"

namespace leakaudit {

inline constexpr std::int64_t kDayMs = 86'400'000;

struct TimestampHistogram {
  std::int64_t bucket_ms = kDayMs;
  std::map<std::pair<std::string, std::int64_t>, std::size_t> counts;  // (label, bucket start) -> count
  std::size_t excluded_count = 0;                                      // pre-snowflake / unparseable ids

  std::size_t buckets_for(std::string_view label) const {
    std::size_t n = 0;
    for (const auto& [key, c] : counts) n += key.first == label;
    return n;
  }
};

/// Per-label counts of decodable timestamps, bucketed from the Unix epoch.
inline TimestampHistogram timestamp_histogram(const Dataset& dataset, std::int64_t bucket_ms = kDayMs) {
  if (bucket_ms <= 0) throw Error(ErrorKind::InvalidArgument, "bucket must be positive");
  TimestampHistogram h;
  h.bucket_ms = bucket_ms;
  for (const auto& r : dataset.records) {
    const auto ts = r.timestamp_ms ? r.timestamp_ms : snowflake::timestamp_or_null(r.id);
    if (!ts) {
      ++h.excluded_count;
      continue;
    }
    const std::int64_t start = (*ts / bucket_ms) * bucket_ms;
    ++h.counts[{r.label, start}];
  }
  return h;
}

inline std::string histogram_csv(const TimestampHistogram& h) {
  std::string out = "label,bucket_start_ms,count\n";
  for (const auto& [key, c] : h.counts) {
    out += csv::join_row({key.first, std::to_string(key.second), std::to_string(c)});
  }
  return out;
}

/// Mean total-variation distance between each non-anchor label's bucket
/// distribution and the anchor label's. 0 means identical time profiles.
inline double histogram_distance_to_anchor(const TimestampHistogram& h, const LabelSet& labels,
                                           std::string_view anchor) {
  auto distribution = [&](std::string_view label) {
    std::map<std::int64_t, double> d;
    double total = 0;
    for (const auto& [key, c] : h.counts) {
      if (key.first == label) {
        d[key.second] += static_cast<double>(c);
        total += static_cast<double>(c);
      }
    }
    if (total > 0) {
      for (auto& [b, v] : d) v /= total;
    }
    return d;
  };
  const auto a = distribution(anchor);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& label : labels.labels()) {
    if (label == anchor) continue;
    const auto d = distribution(label);
    if (d.empty()) continue;
    std::set<std::int64_t> keys;
    for (const auto& [b, v] : a) keys.insert(b);
    for (const auto& [b, v] : d) keys.insert(b);
    double tv = 0.0;
    for (auto b : keys) {
      const double x = a.contains(b) ? a.at(b) : 0.0;
      const double y = d.contains(b) ? d.at(b) : 0.0;
      tv += std::abs(x - y);
    }
    sum += tv / 2.0;
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace leakaudit
