#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "common.hpp"
#include "core.hpp"

namespace leakaudit {

enum class Partition { Train = 0, Dev = 1, Test = 2 };

inline constexpr std::array<std::string_view, 3> kPartitionNames{"train", "dev", "test"};

/// Value of a named field on a record: canonical fields first, then string
/// (or integer) entries of the opaque metadata.
inline std::optional<std::string> field_value(const Record& r, std::string_view field) {
  if (field == "id") return r.id;
  if (field == "label") return r.label;
  if (field == "event") return r.event;
  if (field == "article_id") return r.article_id;
  if (field == "reply_count") {
    return r.reply_count ? std::optional<std::string>(std::to_string(*r.reply_count)) : std::nullopt;
  }
  const std::string key(field);
  if (!r.extra.contains(key)) return std::nullopt;
  const auto& v = r.extra.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return v.dump();
  return std::nullopt;
}

struct SplitSpec {
  std::array<double, 3> ratios{0.7, 0.1, 0.2};
  std::uint64_t seed = 0;
  bool stratify = true;
  std::optional<std::string> group_by;
  bool exclude_conflicting_groups = false;
  std::optional<std::pair<std::string, std::string>> holdout;  // (field, value)
  std::optional<std::vector<std::string>> label_filter;
  std::optional<std::map<std::string, std::size_t>> quotas;
  std::optional<std::int64_t> min_reply_count;

  void check() const {
    double sum = 0.0;
    for (double r : ratios) {
      if (!(r >= 0.0) || !std::isfinite(r)) throw Error(ErrorKind::RatioError, "ratios must be finite and >= 0");
      sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::RatioError, "ratios sum to " + std::to_string(sum));
  }

  json to_json() const {
    json j{{"ratios", ratios}, {"seed", seed}, {"stratify", stratify}};
    j["group_by"] = group_by ? json(*group_by) : json(nullptr);
    j["exclude_conflicting_groups"] = exclude_conflicting_groups;
    j["holdout"] = holdout ? json{{"field", holdout->first}, {"value", holdout->second}} : json(nullptr);
    j["label_filter"] = label_filter ? json(*label_filter) : json(nullptr);
    j["quotas"] = quotas ? json(*quotas) : json(nullptr);
    j["min_reply_count"] = min_reply_count ? json(*min_reply_count) : json(nullptr);
    return j;
  }

  static SplitSpec from_json(const json& j) {
    SplitSpec s;
    if (j.contains("ratios")) s.ratios = j.at("ratios").get<std::array<double, 3>>();
    s.seed = j.value("seed", std::uint64_t{0});
    s.stratify = j.value("stratify", true);
    if (j.contains("group_by") && !j.at("group_by").is_null()) s.group_by = j.at("group_by").get<std::string>();
    s.exclude_conflicting_groups = j.value("exclude_conflicting_groups", false);
    if (j.contains("holdout") && !j.at("holdout").is_null()) {
      s.holdout = {j.at("holdout").at("field").get<std::string>(), j.at("holdout").at("value").get<std::string>()};
    }
    if (j.contains("label_filter") && !j.at("label_filter").is_null()) {
      s.label_filter = j.at("label_filter").get<std::vector<std::string>>();
    }
    if (j.contains("quotas") && !j.at("quotas").is_null()) {
      s.quotas = j.at("quotas").get<std::map<std::string, std::size_t>>();
    }
    if (j.contains("min_reply_count") && !j.at("min_reply_count").is_null()) {
      s.min_reply_count = j.at("min_reply_count").get<std::int64_t>();
    }
    return s;
  }
};

/// Partition of dataset ids. Ids inside each partition follow dataset order.
struct Split {
  std::vector<std::string> train_ids;
  std::vector<std::string> dev_ids;
  std::vector<std::string> test_ids;
  SplitSpec spec;
  std::string dataset_name;
  std::string toolkit_version{kToolkitVersion};
  std::string preset;                 // empty when built from explicit flags
  std::size_t excluded_count = 0;     // records left out (missing group field, conflicts)
  std::size_t missing_count = 0;      // import only: listed ids absent from the dataset
  std::vector<std::string> warnings;

  std::vector<std::string>& part(Partition p) {
    return p == Partition::Train ? train_ids : p == Partition::Dev ? dev_ids : test_ids;
  }
  const std::vector<std::string>& part(Partition p) const {
    return p == Partition::Train ? train_ids : p == Partition::Dev ? dev_ids : test_ids;
  }
  std::size_t size() const noexcept { return train_ids.size() + dev_ids.size() + test_ids.size(); }

  /// Equality on the partition contents only.
  bool same_partitions(const Split& other) const {
    return train_ids == other.train_ids && dev_ids == other.dev_ids && test_ids == other.test_ids;
  }
};

/// Invariant check: disjointness, membership, group and holdout constraints.
/// Returns human-readable problems; empty means the split is consistent.
inline std::vector<std::string> check_split(const Split& split, const Dataset& dataset) {
  std::vector<std::string> problems;
  const auto index = index_ids(dataset);
  std::unordered_map<std::string, Partition> where;
  for (auto p : {Partition::Train, Partition::Dev, Partition::Test}) {
    for (const auto& id : split.part(p)) {
      if (!index.contains(id)) problems.push_back("id " + id + " not in dataset");
      if (!where.emplace(id, p).second) problems.push_back("id " + id + " appears in two partitions");
    }
  }
  if (split.spec.group_by) {
    std::unordered_map<std::string, Partition> group_part;
    for (const auto& [id, p] : where) {
      auto it = index.find(id);
      if (it == index.end()) continue;
      const auto g = field_value(dataset.records[it->second], *split.spec.group_by);
      if (!g) continue;
      auto [gi, inserted] = group_part.emplace(*g, p);
      if (!inserted && gi->second != p) problems.push_back("group " + *g + " spans partitions");
    }
  }
  if (split.spec.holdout) {
    const auto& [field, value] = *split.spec.holdout;
    for (const auto& [id, p] : where) {
      auto it = index.find(id);
      if (it == index.end()) continue;
      const bool in_holdout = field_value(dataset.records[it->second], field) == value;
      if (in_holdout != (p == Partition::Test)) {
        problems.push_back("id " + id + (in_holdout ? " of holdout group outside test" : " in test but not holdout"));
      }
    }
  }
  return problems;
}

namespace detail {

/// Largest-remainder apportionment of n items over ratios. Ties in the
/// fractional part go to the earlier partition.
inline std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& ratios) {
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(n) * ratios[i];
    const double floored = std::floor(exact + 1e-9);
    sizes[i] = static_cast<std::size_t>(floored);
    remainder[i] = std::max(0.0, exact - floored);
    assigned += sizes[i];
  }
  while (assigned > n) {
    // Only reachable through the epsilon above; trim the largest.
    auto i = static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    --sizes[i];
    --assigned;
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return remainder[a] > remainder[b]; });
  for (std::size_t j = 0; assigned < n; j = (j + 1) % 3) {
    if (ratios[order[j]] <= 0.0) continue;
    ++sizes[order[j]];
    ++assigned;
  }
  return sizes;
}

/// Writes partition membership for indices into `assignment`.
inline void assign_shuffled(std::vector<std::size_t> indices, const std::array<double, 3>& ratios, Rng& rng,
                            std::vector<int>& assignment) {
  rng.shuffle(indices.begin(), indices.end());
  const auto sizes = apportion(indices.size(), ratios);
  std::size_t pos = 0;
  for (int p = 0; p < 3; ++p) {
    for (std::size_t i = 0; i < sizes[static_cast<std::size_t>(p)]; ++i) assignment[indices[pos++]] = p;
  }
}

inline Split collect(const Dataset& dataset, const std::vector<int>& assignment, const SplitSpec& spec) {
  Split s;
  s.spec = spec;
  s.dataset_name = dataset.name;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    if (assignment[i] < 0) {
      ++s.excluded_count;
      continue;
    }
    s.part(static_cast<Partition>(assignment[i])).push_back(dataset.records[i].id);
  }
  return s;
}

}  // namespace detail

/// Seeded shuffle then partition. Stratified mode apportions each label
/// separately, so per-label sizes are within 1 of the exact proportions.
inline Split random_split(const Dataset& dataset, const SplitSpec& spec) {
  if (dataset.empty()) throw Error(ErrorKind::EmptyDataset, "cannot split an empty dataset");
  spec.check();
  if (spec.group_by || spec.holdout) {
    throw Error(ErrorKind::InvalidArgument, "random_split does not take group_by or holdout");
  }
  Rng rng(spec.seed);
  std::vector<int> assignment(dataset.records.size(), -1);
  if (spec.stratify) {
    std::map<std::size_t, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < dataset.records.size(); ++i) {
      const auto li = dataset.label_set.index_of(dataset.records[i].label);
      by_label[li.value_or(dataset.label_set.size())].push_back(i);
    }
    for (auto& [label, indices] : by_label) detail::assign_shuffled(std::move(indices), spec.ratios, rng, assignment);
  } else {
    std::vector<std::size_t> all(dataset.records.size());
    std::iota(all.begin(), all.end(), 0);
    detail::assign_shuffled(std::move(all), spec.ratios, rng, assignment);
  }
  return detail::collect(dataset, assignment, spec);
}

/// Groups whose records carry two or more distinct labels.
inline std::vector<std::string> find_conflicting_groups(const Dataset& dataset, std::string_view group_by) {
  std::map<std::string, std::string> first_label;
  std::set<std::string> conflicted;
  for (const auto& r : dataset.records) {
    const auto g = field_value(r, group_by);
    if (!g) continue;
    auto [it, inserted] = first_label.emplace(*g, r.label);
    if (!inserted && it->second != r.label) conflicted.insert(*g);
  }
  return {conflicted.begin(), conflicted.end()};
}

/// Shuffles groups and apportions group counts; every record follows its
/// group. Records lacking the group field are excluded and counted.
inline Split group_split(const Dataset& dataset, const SplitSpec& spec) {
  if (dataset.empty()) throw Error(ErrorKind::EmptyDataset, "cannot split an empty dataset");
  if (!spec.group_by) throw Error(ErrorKind::InvalidArgument, "group_split requires group_by");
  spec.check();
  const std::string& field = *spec.group_by;

  std::set<std::string> dropped;
  if (spec.exclude_conflicting_groups) {
    for (auto& g : find_conflicting_groups(dataset, field)) dropped.insert(std::move(g));
  }
  std::vector<std::string> groups;
  std::unordered_map<std::string, std::size_t> group_index;
  std::vector<std::optional<std::size_t>> record_group(dataset.records.size());
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto g = field_value(dataset.records[i], field);
    if (!g || dropped.contains(*g)) continue;
    auto [it, inserted] = group_index.emplace(*g, groups.size());
    if (inserted) groups.push_back(*g);
    record_group[i] = it->second;
  }
  if (groups.empty()) throw Error(ErrorKind::MissingGroupField, "no record has field '" + field + "'");

  Rng rng(spec.seed);
  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> group_part(groups.size(), -1);
  detail::assign_shuffled(std::move(order), spec.ratios, rng, group_part);

  std::vector<int> assignment(dataset.records.size(), -1);
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    if (record_group[i]) assignment[i] = group_part[*record_group[i]];
  }
  Split s = detail::collect(dataset, assignment, spec);
  if (groups.size() == 1) s.warnings.push_back("single group '" + groups.front() + "': everything in one partition");
  if (!dropped.empty()) {
    std::string list;
    for (const auto& g : dropped) list += (list.empty() ? "" : ", ") + g;
    s.warnings.push_back("excluded conflicting groups: " + list);
  }
  return s;
}

/// Test = every record whose `field` equals `value`; the rest is split
/// train/dev by `dev_ratio` (seeded, optionally stratified).
inline Split holdout_split(const Dataset& dataset, const std::string& field, const std::string& value,
                           double dev_ratio, std::uint64_t seed, bool stratify = true) {
  if (dataset.empty()) throw Error(ErrorKind::EmptyDataset, "cannot split an empty dataset");
  if (!(dev_ratio >= 0.0 && dev_ratio <= 1.0)) throw Error(ErrorKind::RatioError, "dev_ratio must be in [0, 1]");
  SplitSpec spec;
  spec.ratios = {1.0 - dev_ratio, dev_ratio, 0.0};
  spec.seed = seed;
  spec.stratify = stratify;
  spec.holdout = std::make_pair(field, value);

  std::vector<int> assignment(dataset.records.size(), -1);
  std::map<std::size_t, std::vector<std::size_t>> rest;
  bool found = false;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto& r = dataset.records[i];
    if (field_value(r, field) == value) {
      assignment[i] = static_cast<int>(Partition::Test);
      found = true;
    } else {
      const std::size_t key = stratify ? dataset.label_set.index_of(r.label).value_or(dataset.label_set.size()) : 0;
      rest[key].push_back(i);
    }
  }
  if (!found) throw Error(ErrorKind::UnknownEvent, field + " value '" + value + "' not present");
  Rng rng(seed);
  const std::array<double, 3> ratios{1.0 - dev_ratio, dev_ratio, 0.0};
  for (auto& [key, indices] : rest) detail::assign_shuffled(std::move(indices), ratios, rng, assignment);
  return detail::collect(dataset, assignment, spec);
}

inline Split event_holdout_split(const Dataset& dataset, const std::string& event, double dev_ratio,
                                 std::uint64_t seed, bool stratify = true) {
  return holdout_split(dataset, "event", event, dev_ratio, seed, stratify);
}

/// Dispatches on SplitSpec: holdout, then group, then random.
inline Split make_split(const Dataset& dataset, const SplitSpec& spec) {
  if (spec.holdout) {
    return holdout_split(dataset, spec.holdout->first, spec.holdout->second, spec.ratios[1], spec.seed,
                         spec.stratify);
  }
  if (spec.group_by) return group_split(dataset, spec);
  return random_split(dataset, spec);
}

// ---------------------------------------------------------------------------
// Dataset filters

/// Keeps records with the given labels; the label set narrows (original order).
inline Dataset label_filter(const Dataset& dataset, const std::vector<std::string>& labels) {
  std::unordered_set<std::string> keep;
  for (const auto& l : labels) {
    if (!dataset.label_set.contains(l)) throw Error(ErrorKind::UnknownLabel, "label '" + l + "' not in label set");
    keep.insert(l);
  }
  Dataset out = filter_records(dataset, [&](const Record& r) { return keep.contains(r.label); });
  std::vector<std::string> narrowed;
  for (const auto& l : dataset.label_set.labels()) {
    if (keep.contains(l)) narrowed.push_back(l);
  }
  out.label_set = LabelSet(std::move(narrowed));
  return out;
}

/// Seeded per-label sample without replacement among records with
/// reply_count >= min_reply_count. Labels with no quota (or 0) are dropped.
inline Dataset quota_subsample(const Dataset& dataset, const std::map<std::string, std::size_t>& quotas,
                               std::optional<std::int64_t> min_reply_count, std::uint64_t seed) {
  for (const auto& [label, q] : quotas) {
    if (!dataset.label_set.contains(label)) throw Error(ErrorKind::UnknownLabel, "quota for unknown label '" + label + "'");
  }
  std::vector<std::vector<std::size_t>> eligible(dataset.label_set.size());
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto& r = dataset.records[i];
    if (min_reply_count && (!r.reply_count || *r.reply_count < *min_reply_count)) continue;
    if (auto li = dataset.label_set.index_of(r.label)) eligible[*li].push_back(i);
  }
  std::string shortfall;
  for (std::size_t l = 0; l < dataset.label_set.size(); ++l) {
    auto it = quotas.find(dataset.label_set[l]);
    const std::size_t q = it == quotas.end() ? 0 : it->second;
    if (q > eligible[l].size()) {
      shortfall += (shortfall.empty() ? "" : "; ") + dataset.label_set[l] + ": need " + std::to_string(q) +
                   ", have " + std::to_string(eligible[l].size());
    }
  }
  if (!shortfall.empty()) throw Error(ErrorKind::InsufficientRecords, shortfall);

  Rng rng(seed);
  std::vector<bool> keep(dataset.records.size(), false);
  std::vector<std::string> labels;
  for (std::size_t l = 0; l < dataset.label_set.size(); ++l) {
    auto it = quotas.find(dataset.label_set[l]);
    const std::size_t q = it == quotas.end() ? 0 : it->second;
    if (q == 0) continue;
    labels.push_back(dataset.label_set[l]);
    auto pool = eligible[l];
    rng.shuffle(pool.begin(), pool.end());
    for (std::size_t i = 0; i < q; ++i) keep[pool[i]] = true;
  }
  Dataset out;
  out.label_set = LabelSet(std::move(labels));
  out.name = dataset.name;
  out.source_notes = dataset.source_notes;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    if (keep[i]) out.records.push_back(dataset.records[i]);
  }
  return out;
}

/// The `n` most frequent events (ties: lexicographic), records without an
/// event excluded.
inline std::vector<std::string> largest_events(const Dataset& dataset, std::size_t n) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : dataset.records) {
    if (r.event) ++counts[*r.event];
  }
  std::vector<std::pair<std::string, std::size_t>> v(counts.begin(), counts.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(n, v.size()); ++i) out.push_back(v[i].first);
  return out;
}

// ---------------------------------------------------------------------------
// Split files

inline json split_to_json(const Split& split) {
  json provenance{{"toolkit_version", split.toolkit_version}, {"dataset", split.dataset_name}};
  if (!split.preset.empty()) provenance["preset"] = split.preset;
  return json{{"format", "leakaudit.split"},
              {"version", 1},
              {"train", split.train_ids},
              {"dev", split.dev_ids},
              {"test", split.test_ids},
              {"spec", split.spec.to_json()},
              {"provenance", std::move(provenance)},
              {"excluded_count", split.excluded_count}};
}

inline std::string split_file_contents(const Split& split) { return split_to_json(split).dump(2) + "\n"; }

inline void export_split(const Split& split, const std::filesystem::path& path) {
  write_file(path, split_file_contents(split));
}

namespace detail {

inline std::vector<std::string> id_list(const json& arr, const char* name) {
  if (!arr.is_array()) throw Error(ErrorKind::Schema, std::string("'") + name + "' must be an array");
  std::vector<std::string> out;
  for (const auto& v : arr) {
    if (v.is_string()) {
      out.push_back(v.get<std::string>());
    } else if (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      out.push_back(std::to_string(v.get<std::uint64_t>()));
    } else {
      throw Error(ErrorKind::Schema, std::string("non-id entry in '") + name + "'");
    }
  }
  return out;
}

inline std::vector<std::string> ids_from_text(std::string_view content) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto nl = content.find('\n', pos);
    std::string_view line = content.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? content.size() : nl + 1;
    const auto comma = line.find(',');
    if (comma != std::string_view::npos) line = line.substr(0, comma);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (!parse_u64(line)) continue;  // headers, blanks
    out.emplace_back(line);
  }
  return out;
}

}  // namespace detail

/// Reads a split file and resolves it against `dataset`. Ids absent from the
/// dataset are dropped and counted (hydration loss is expected). Also
/// accepts a directory holding train/dev/test id lists (.txt or .csv, first
/// column).
inline Split import_split(const std::filesystem::path& path, const Dataset& dataset) {
  Split raw;
  if (std::filesystem::is_directory(path)) {
    for (auto p : {Partition::Train, Partition::Dev, Partition::Test}) {
      const std::string base(kPartitionNames[static_cast<std::size_t>(p)]);
      for (const char* ext : {".txt", ".csv", ".ids"}) {
        const auto file = path / (base + ext);
        if (std::filesystem::exists(file)) {
          raw.part(p) = detail::ids_from_text(read_file(file));
          break;
        }
      }
    }
    raw.dataset_name = dataset.name;
    raw.toolkit_version = "external";
  } else {
    json j;
    try {
      j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::Schema, "split file must be a JSON object");
    try {
      for (auto p : {Partition::Train, Partition::Dev, Partition::Test}) {
        const std::string key(kPartitionNames[static_cast<std::size_t>(p)]);
        if (j.contains(key)) raw.part(p) = detail::id_list(j.at(key), key.c_str());
      }
      if (j.contains("spec")) raw.spec = SplitSpec::from_json(j.at("spec"));
      if (j.contains("provenance")) {
        const auto& pv = j.at("provenance");
        raw.dataset_name = pv.value("dataset", "");
        raw.toolkit_version = pv.value("toolkit_version", "");
        raw.preset = pv.value("preset", "");
      }
      raw.excluded_count = j.value("excluded_count", std::size_t{0});
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Schema, path.string() + ": " + e.what());
    }
  }

  const auto index = index_ids(dataset);
  std::unordered_set<std::string> seen;
  Split out = raw;
  for (auto p : {Partition::Train, Partition::Dev, Partition::Test}) {
    auto& ids = out.part(p);
    ids.clear();
    for (const auto& id : raw.part(p)) {
      if (!seen.insert(id).second) throw Error(ErrorKind::Schema, "id " + id + " listed twice");
      if (index.contains(id)) {
        ids.push_back(id);
      } else {
        ++out.missing_count;
      }
    }
  }
  return out;
}

}  // namespace leakaudit
