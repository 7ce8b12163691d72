#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "core.hpp"
#include "forest.hpp"
#include "metrics.hpp"
#include "snowflake.hpp"
#include "split.hpp"

namespace leakaudit {

enum class Verdict { None, Mild, Moderate, Severe };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::None: return "none";
    case Verdict::Mild: return "mild";
    case Verdict::Moderate: return "moderate";
    case Verdict::Severe: return "severe";
  }
  return "none";
}

/// Lower bounds of the mild / moderate / severe bands on leakage score.
struct VerdictThresholds {
  double mild = 0.05;
  double moderate = 0.15;
  double severe = 0.40;

  Verdict classify(double score) const noexcept {
    if (score < mild) return Verdict::None;
    if (score < moderate) return Verdict::Mild;
    if (score < severe) return Verdict::Moderate;
    return Verdict::Severe;
  }
  json to_json() const { return json{{"mild", mild}, {"moderate", moderate}, {"severe", severe}}; }
};

/// Excess of macro F1 over the baseline, normalized by the baseline's
/// headroom and clamped to [0, 1].
inline double leakage_score(double macro_f1, double baseline_macro_f1) noexcept {
  if (baseline_macro_f1 >= 1.0) return 0.0;
  const double s = (macro_f1 - baseline_macro_f1) / (1.0 - baseline_macro_f1);
  return std::clamp(s, 0.0, 1.0);
}

struct IdLeakReport {
  std::size_t k = 0;
  std::vector<std::pair<std::string, double>> per_class_f1;
  double macro_f1 = 0.0;
  double baseline_macro_f1 = 0.0;
  double leakage_score = 0.0;
  Verdict verdict = Verdict::None;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t excluded_short_ids = 0;
  std::string split_source = "provided";
  ForestConfig config;
  VerdictThresholds thresholds;

  double class_f1(std::string_view label) const {
    for (const auto& [l, f] : per_class_f1) {
      if (l == label) return f;
    }
    return 0.0;
  }

  json to_json() const {
    json per_class = json::object();
    for (const auto& [l, f] : per_class_f1) per_class[l] = f;
    return json{{"k", k},
                {"per_class_f1", std::move(per_class)},
                {"macro_f1", macro_f1},
                {"baseline_macro_f1", baseline_macro_f1},
                {"leakage_score", leakage_score},
                {"verdict", to_string(verdict)},
                {"n_train", n_train},
                {"n_test", n_test},
                {"excluded_short_ids", excluded_short_ids},
                {"split_source", split_source},
                {"forest", config.to_json()},
                {"thresholds", thresholds.to_json()},
                {"toolkit_version", kToolkitVersion}};
  }
};

namespace detail {

struct DigitRows {
  FeatureMatrix x;
  std::vector<std::size_t> y;
  std::size_t too_short = 0;
};

inline DigitRows digit_rows(const Dataset& dataset, const IdIndex& index, const std::vector<std::string>& ids,
                            std::size_t k) {
  DigitRows out{FeatureMatrix(k), {}, 0};
  std::vector<int> row(k);
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) continue;
    const Record& r = dataset.records[it->second];
    const auto value = parse_u64(r.id);
    const auto label = dataset.label_set.index_of(r.label);
    if (!value || !label) continue;
    const std::string canonical = std::to_string(*value);
    if (canonical.size() < k) {
      ++out.too_short;
      continue;
    }
    for (std::size_t i = 0; i < k; ++i) row[i] = canonical[i] - '0';
    out.x.push_row(row);
    out.y.push_back(*label);
  }
  return out;
}

inline LabelDistribution distribution_of(const std::vector<std::size_t>& y, const LabelSet& labels) {
  LabelDistribution d{labels, std::vector<std::size_t>(labels.size(), 0)};
  for (auto i : y) ++d.counts[i];
  return d;
}

}  // namespace detail

/// Trains a forest on the first k id digits of the train partition and scores
/// it on the test partition against the stratified baseline.
inline IdLeakReport run_id_leak_test(const Dataset& dataset, const Split& split, std::size_t k,
                                     const ForestConfig& config, const VerdictThresholds& thresholds = {}) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
  if (split.train_ids.empty() || split.test_ids.empty()) {
    throw Error(ErrorKind::EmptySplit, "train and test partitions must be non-empty");
  }
  const auto index = index_ids(dataset);
  auto train = detail::digit_rows(dataset, index, split.train_ids, k);
  auto test = detail::digit_rows(dataset, index, split.test_ids, k);
  if (train.y.empty() || test.y.empty()) {
    throw Error(ErrorKind::AllIdsTooShort, "no train or test id has " + std::to_string(k) + " digits");
  }

  const auto model = fit_forest(train.x, train.y, dataset.label_set, config);
  const auto predicted = model.predict_indices(test.x);
  const auto eval = evaluate_indices(test.y, predicted, dataset.label_set);

  IdLeakReport report;
  report.k = k;
  for (const auto& [label, m] : eval.per_class) report.per_class_f1.emplace_back(label, m.f1);
  report.macro_f1 = eval.macro_f1;
  report.baseline_macro_f1 = baseline_expected_macro_f1(detail::distribution_of(train.y, dataset.label_set),
                                                        detail::distribution_of(test.y, dataset.label_set));
  report.leakage_score = leakage_score(report.macro_f1, report.baseline_macro_f1);
  report.verdict = thresholds.classify(report.leakage_score);
  report.n_train = train.y.size();
  report.n_test = test.y.size();
  report.excluded_short_ids = train.too_short + test.too_short;
  report.config = config;
  report.thresholds = thresholds;
  return report;
}

struct SuiteOptions {
  std::vector<std::size_t> k_list{2, 3};
  std::size_t n_splits = 5;
  std::array<double, 3> ratios{0.7, 0.1, 0.2};
  std::uint64_t seed = 0;
  ForestConfig forest;
  VerdictThresholds thresholds;
  std::optional<Split> canonical_split;
};

struct SuiteSummary {
  std::size_t k = 0;
  std::size_t runs = 0;
  double mean_macro_f1 = 0.0;
  double std_macro_f1 = 0.0;
  double mean_baseline = 0.0;
  double mean_leakage_score = 0.0;
  double std_leakage_score = 0.0;
  Verdict verdict = Verdict::None;  // of the mean score

  json to_json() const {
    return json{{"k", k},
                {"runs", runs},
                {"mean_macro_f1", mean_macro_f1},
                {"std_macro_f1", std_macro_f1},
                {"mean_baseline_macro_f1", mean_baseline},
                {"mean_leakage_score", mean_leakage_score},
                {"std_leakage_score", std_leakage_score},
                {"verdict", to_string(verdict)}};
  }
};

struct SuiteResult {
  std::vector<IdLeakReport> reports;
  std::vector<SuiteSummary> summaries;
  std::string split_source;

  json to_json() const {
    json r = json::array();
    for (const auto& x : reports) r.push_back(x.to_json());
    json s = json::array();
    for (const auto& x : summaries) s.push_back(x.to_json());
    return json{{"split_source", split_source}, {"reports", std::move(r)}, {"summaries", std::move(s)}};
  }
};

namespace detail {
inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}
}  // namespace detail

/// Runs the ID test for every k. Uses the canonical split when given,
/// otherwise n_splits stratified splits with seeds derived from `seed`.
inline SuiteResult run_id_leak_suite(const Dataset& dataset, const SuiteOptions& options) {
  if (dataset.empty()) throw Error(ErrorKind::EmptyDataset, "dataset is empty");
  std::vector<Split> splits;
  SuiteResult result;
  if (options.canonical_split) {
    splits.push_back(*options.canonical_split);
    result.split_source = "canonical";
  } else {
    for (std::size_t i = 0; i < std::max<std::size_t>(1, options.n_splits); ++i) {
      SplitSpec spec;
      spec.ratios = options.ratios;
      spec.stratify = true;
      spec.seed = derive_seed(options.seed, i);
      splits.push_back(random_split(dataset, spec));
    }
    result.split_source = "generated";
  }
  for (std::size_t k : options.k_list) {
    std::vector<double> macros, scores, baselines;
    for (std::size_t i = 0; i < splits.size(); ++i) {
      ForestConfig config = options.forest;
      config.seed = derive_seed(options.seed ^ options.forest.seed, 0x1000 + i);
      auto report = run_id_leak_test(dataset, splits[i], k, config, options.thresholds);
      report.split_source = result.split_source;
      macros.push_back(report.macro_f1);
      scores.push_back(report.leakage_score);
      baselines.push_back(report.baseline_macro_f1);
      result.reports.push_back(std::move(report));
    }
    SuiteSummary s;
    s.k = k;
    s.runs = splits.size();
    std::tie(s.mean_macro_f1, s.std_macro_f1) = detail::mean_std(macros);
    std::tie(s.mean_leakage_score, s.std_leakage_score) = detail::mean_std(scores);
    s.mean_baseline = detail::mean_std(baselines).first;
    s.verdict = options.thresholds.classify(s.mean_leakage_score);
    result.summaries.push_back(s);
  }
  return result;
}

}  // namespace leakaudit
