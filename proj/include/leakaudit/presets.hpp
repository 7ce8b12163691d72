#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"
#include "split.hpp"

namespace leakaudit {

// Mirrors presets/presets.json; a test keeps the two in sync.
inline constexpr std::string_view kBuiltinPresets = R"PRESETS({
  "format": "leakaudit.presets",
  "version": 1,
  "presets": {
    "pheme9-tf": {
      "description": "PHEME (all 9 events), true vs. false, 70-10-20 stratified",
      "label_filter": ["true", "false"],
      "ratios": [0.7, 0.1, 0.2]
    },
    "pheme5-rnr": {
      "description": "PHEME 5 largest events, rumour vs. non-rumour, 70-10-20 stratified",
      "top_events": 5,
      "label_map": {"true": "rumor", "false": "rumor", "unverified": "rumor"},
      "ratios": [0.7, 0.1, 0.2]
    },
    "pheme5-3way": {
      "description": "PHEME 5 largest events, true/false/unverified, 70-10-20 stratified",
      "top_events": 5,
      "label_filter": ["true", "false", "unverified"],
      "ratios": [0.7, 0.1, 0.2]
    },
    "pheme9-4way": {
      "description": "PHEME 4-way: 800/400/600/500 non-rumor/false/true/unverified with >= 3 replies, 80-10-10",
      "quotas": {"non-rumor": 800, "false": 400, "true": 600, "unverified": 500},
      "min_reply_count": 3,
      "ratios": [0.8, 0.1, 0.1]
    },
    "pheme5-lc": {
      "description": "PHEME 5 largest events, 3-way labels, train on four events and test on charliehebdo",
      "top_events": 5,
      "label_filter": ["true", "false", "unverified"],
      "holdout": {"field": "event", "value": "charliehebdo"},
      "dev_ratio": 0.1
    },
    "politifact": {
      "description": "FakeNewsNet PolitiFact, split by article 75-10-15, conflicting articles removed",
      "group_by": "article_id",
      "exclude_conflicting_groups": true,
      "ratios": [0.75, 0.1, 0.15]
    },
    "gossipcop": {
      "description": "FakeNewsNet GossipCop, split by article 75-10-15, conflicting articles removed",
      "group_by": "article_id",
      "exclude_conflicting_groups": true,
      "ratios": [0.75, 0.1, 0.15]
    },
    "twitter15": {
      "description": "Twitter15 4-way: 10% dev, remainder 75:25 train:test, stratified",
      "ratios": [0.675, 0.1, 0.225]
    },
    "twitter16": {
      "description": "Twitter16 4-way: 10% dev, remainder 75:25 train:test, stratified",
      "ratios": [0.675, 0.1, 0.225]
    },
    "twitter15-tf": {
      "description": "Twitter15 true vs. false only, 70-10-20 stratified",
      "label_filter": ["true", "false"],
      "ratios": [0.7, 0.1, 0.2]
    },
    "twitter16-tf": {
      "description": "Twitter16 true vs. false only, 70-10-20 stratified",
      "label_filter": ["true", "false"],
      "ratios": [0.7, 0.1, 0.2]
    },
    "wnut2020": {
      "description": "WNUT-2020 Task 2 organizer split, read from each record's 'split' field",
      "fixed_split_field": "split"
    }
  }
}
)PRESETS";

/// Named split protocol: optional dataset preparation steps followed by a
/// split rule.
struct Preset {
  std::string name;
  std::string description;
  std::optional<std::size_t> top_events;
  std::optional<std::vector<std::string>> label_filter;
  std::optional<std::map<std::string, std::string>> label_map;  // stratification only
  std::optional<std::map<std::string, std::size_t>> quotas;
  std::optional<std::int64_t> min_reply_count;
  std::array<double, 3> ratios{0.7, 0.1, 0.2};
  bool stratify = true;
  std::optional<std::string> group_by;
  bool exclude_conflicting_groups = false;
  std::optional<std::pair<std::string, std::string>> holdout;
  double dev_ratio = 0.1;
  std::optional<std::string> fixed_split_field;

  static Preset from_json(std::string name, const json& j) {
    Preset p;
    p.name = std::move(name);
    p.description = j.value("description", "");
    if (j.contains("top_events")) p.top_events = j.at("top_events").get<std::size_t>();
    if (j.contains("label_filter")) p.label_filter = j.at("label_filter").get<std::vector<std::string>>();
    if (j.contains("label_map")) p.label_map = j.at("label_map").get<std::map<std::string, std::string>>();
    if (j.contains("quotas")) p.quotas = j.at("quotas").get<std::map<std::string, std::size_t>>();
    if (j.contains("min_reply_count")) p.min_reply_count = j.at("min_reply_count").get<std::int64_t>();
    if (j.contains("ratios")) p.ratios = j.at("ratios").get<std::array<double, 3>>();
    p.stratify = j.value("stratify", true);
    if (j.contains("group_by")) p.group_by = j.at("group_by").get<std::string>();
    p.exclude_conflicting_groups = j.value("exclude_conflicting_groups", false);
    if (j.contains("holdout")) {
      p.holdout = {j.at("holdout").at("field").get<std::string>(), j.at("holdout").at("value").get<std::string>()};
    }
    p.dev_ratio = j.value("dev_ratio", 0.1);
    if (j.contains("fixed_split_field")) p.fixed_split_field = j.at("fixed_split_field").get<std::string>();
    return p;
  }
};

using PresetRegistry = std::map<std::string, Preset>;

inline PresetRegistry parse_presets(std::string_view content) {
  PresetRegistry out;
  try {
    const auto j = json::parse(content);
    for (const auto& [name, body] : j.at("presets").items()) out.emplace(name, Preset::from_json(name, body));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("preset registry: ") + e.what());
  }
  return out;
}

inline const PresetRegistry& builtin_presets() {
  static const PresetRegistry registry = parse_presets(kBuiltinPresets);
  return registry;
}

/// Registry from `<dir>/presets.json` when it exists, else the built-in one.
inline PresetRegistry load_presets(const std::optional<std::filesystem::path>& config_dir) {
  if (config_dir) {
    const auto file = *config_dir / "presets.json";
    if (std::filesystem::exists(file)) return parse_presets(read_file(file));
  }
  return builtin_presets();
}

namespace detail {

inline std::optional<Partition> partition_from_name(std::string_view v) {
  if (v == "train") return Partition::Train;
  if (v == "dev" || v == "val" || v == "valid" || v == "validation") return Partition::Dev;
  if (v == "test") return Partition::Test;
  return std::nullopt;
}

}  // namespace detail

/// Runs a preset. The dataset preparation (event/label filters, quota
/// subsampling) uses a seed derived from `seed`; the split itself uses `seed`.
inline Split apply_preset(const Dataset& dataset, const Preset& preset, std::uint64_t seed) {
  Dataset work = dataset;
  SplitSpec spec;
  spec.seed = seed;
  spec.ratios = preset.ratios;
  spec.stratify = preset.stratify;
  spec.group_by = preset.group_by;
  spec.exclude_conflicting_groups = preset.exclude_conflicting_groups;
  spec.label_filter = preset.label_filter;
  spec.quotas = preset.quotas;
  spec.min_reply_count = preset.min_reply_count;

  if (preset.top_events) {
    const auto events = largest_events(work, *preset.top_events);
    const std::set<std::string> keep(events.begin(), events.end());
    work = filter_records(work, [&](const Record& r) { return r.event && keep.contains(*r.event); });
  }
  if (preset.label_filter) work = label_filter(work, *preset.label_filter);
  if (preset.quotas) work = quota_subsample(work, *preset.quotas, preset.min_reply_count, derive_seed(seed, 0x5155));
  if (preset.label_map) {
    std::vector<std::string> mapped;
    for (auto& r : work.records) {
      if (auto it = preset.label_map->find(r.label); it != preset.label_map->end()) r.label = it->second;
      if (std::find(mapped.begin(), mapped.end(), r.label) == mapped.end()) mapped.push_back(r.label);
    }
    work.label_set = LabelSet(std::move(mapped));
  }

  Split split;
  if (preset.fixed_split_field) {
    std::vector<int> assignment(work.records.size(), -1);
    for (std::size_t i = 0; i < work.records.size(); ++i) {
      if (const auto v = field_value(work.records[i], *preset.fixed_split_field)) {
        if (const auto p = detail::partition_from_name(*v)) assignment[i] = static_cast<int>(*p);
      }
    }
    split = detail::collect(work, assignment, spec);
  } else if (preset.holdout) {
    split = holdout_split(work, preset.holdout->first, preset.holdout->second, preset.dev_ratio, seed,
                          preset.stratify);
    split.spec.label_filter = preset.label_filter;
  } else if (preset.group_by) {
    split = group_split(work, spec);
  } else {
    split = random_split(work, spec);
  }
  split.dataset_name = dataset.name;
  split.preset = preset.name;
  split.excluded_count = dataset.records.size() - split.size();
  return split;
}

}  // namespace leakaudit
