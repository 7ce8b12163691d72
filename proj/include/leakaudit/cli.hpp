#pragma once

// Command-line front end. Exit codes: 0 success / gate passed, 1 execution
// error, 2 audit gate failed.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "leakaudit.hpp"

namespace leakaudit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitGateFailed = 2;

inline constexpr const char* kConfigDirEnv = "LEAKAUDIT_CONFIG_DIR";

/// Parses "7d", "12h", "30m", "45s", "250ms" or a bare millisecond count.
inline std::int64_t parse_duration_ms(std::string_view text) {
  struct Unit {
    std::string_view suffix;
    std::int64_t ms;
  };
  static constexpr Unit units[] = {{"ms", 1}, {"d", kDayMs}, {"h", 3'600'000}, {"m", 60'000}, {"s", 1000}};
  for (const auto& u : units) {
    if (text.size() > u.suffix.size() && text.substr(text.size() - u.suffix.size()) == u.suffix) {
      const auto v = parse_u64(text.substr(0, text.size() - u.suffix.size()));
      if (v) return static_cast<std::int64_t>(*v) * u.ms;
    }
  }
  if (const auto v = parse_u64(text)) return static_cast<std::int64_t>(*v);
  throw Error(ErrorKind::InvalidArgument, "bad duration '" + std::string(text) + "'");
}

inline std::string percent(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(1) << 100.0 * v;
  return ss.str();
}

struct DatasetArgs {
  std::string path;
  std::string manifest;

  void add_to(CLI::App& cmd) {
    cmd.add_option("dataset", path, "Dataset file (.jsonl or .csv)")->required();
    cmd.add_option("--manifest", manifest, "Manifest JSON (labels and field mapping)");
  }
  Dataset load() const {
    const Manifest m = manifest.empty() ? Manifest{} : load_manifest(manifest);
    return load_dataset(path, m);
  }
};

inline std::optional<std::filesystem::path> config_dir(const std::string& flag) {
  if (!flag.empty()) return std::filesystem::path(flag);
  if (const char* env = std::getenv(kConfigDirEnv); env && *env) return std::filesystem::path(env);
  return std::nullopt;
}

inline json fingerprint(const Dataset& d) {
  const auto dist = label_distribution(d);
  json labels = json::object();
  for (std::size_t i = 0; i < dist.counts.size(); ++i) labels[dist.labels[i]] = dist.counts[i];
  std::optional<std::int64_t> lo, hi;
  std::size_t pre = 0;
  for (const auto& r : d.records) {
    if (!r.timestamp_ms) {
      ++pre;
      continue;
    }
    lo = lo ? std::min(*lo, *r.timestamp_ms) : *r.timestamp_ms;
    hi = hi ? std::max(*hi, *r.timestamp_ms) : *r.timestamp_ms;
  }
  return json{{"name", d.name},
              {"records", d.size()},
              {"label_order", d.label_set.labels()},
              {"label_distribution", std::move(labels)},
              {"time_span_ms", lo ? json{{"min", *lo}, {"max", *hi}} : json(nullptr)},
              {"pre_snowflake_ids", pre}};
}

inline void print_distribution(std::ostream& out, const Dataset& d, const std::vector<std::string>& ids,
                               std::string_view name) {
  const auto index = index_ids(d);
  std::vector<std::size_t> counts(d.label_set.size(), 0);
  for (const auto& id : ids) {
    if (auto it = index.find(id); it != index.end()) {
      if (auto li = d.label_set.index_of(d.records[it->second].label)) ++counts[*li];
    }
  }
  out << "  " << std::left << std::setw(6) << name << std::right << std::setw(8) << ids.size();
  for (std::size_t i = 0; i < counts.size(); ++i) out << "  " << d.label_set[i] << "=" << counts[i];
  out << "\n";
}

// ---------------------------------------------------------------------------

struct AuditOptions {
  DatasetArgs data;
  std::vector<std::size_t> k_list{2, 3};
  std::size_t n_splits = 5;
  std::string split_file;
  std::uint64_t seed = 0;
  double fail_over = 0.40;
  std::vector<double> thresholds{0.05, 0.15, 0.40};
  std::size_t trees = 100;
  std::size_t max_depth = 25;
  std::size_t min_df = 5;
  std::vector<std::string> keywords;
  double dup_threshold = 0.8;
  bool no_text = false;
  std::string json_out;
  std::string tokens_csv, duplicates_csv, scatter_csv, scatter_label, contamination_csv;
};

inline int cmd_audit(const AuditOptions& o, std::ostream& out) {
  const Dataset d = o.data.load();
  SuiteOptions suite;
  suite.k_list = o.k_list;
  suite.n_splits = o.n_splits;
  suite.seed = o.seed;
  suite.forest.n_trees = o.trees;
  suite.forest.max_depth = o.max_depth;
  if (o.thresholds.size() != 3) throw Error(ErrorKind::InvalidArgument, "--thresholds takes three values");
  suite.thresholds = {o.thresholds[0], o.thresholds[1], o.thresholds[2]};
  if (!o.split_file.empty()) suite.canonical_split = import_split(o.split_file, d);
  const auto leak = run_id_leak_suite(d, suite);

  json bundle;
  bundle["toolkit_version"] = kToolkitVersion;
  bundle["config"] = json{{"k", o.k_list},
                          {"n_splits", o.n_splits},
                          {"split_file", o.split_file.empty() ? json(nullptr) : json(o.split_file)},
                          {"seed", o.seed},
                          {"fail_over", o.fail_over},
                          {"thresholds", suite.thresholds.to_json()},
                          {"forest", suite.forest.to_json()},
                          {"min_df", o.min_df},
                          {"keywords", o.keywords},
                          {"dup_threshold", o.dup_threshold},
                          {"text_audits", !o.no_text}};
  bundle["fingerprint"] = fingerprint(d);
  bundle["id_leak"] = leak.to_json();

  out << "dataset " << d.name << ": " << d.size() << " records\n";
  out << "ID-digit leakage (" << leak.split_source << " split" << (leak.split_source == "generated" ? "s" : "")
      << ")\n";
  double worst = 0.0;
  for (const auto& s : leak.summaries) {
    out << "  k=" << s.k << "  macro F1 " << percent(s.mean_macro_f1) << " (sd " << percent(s.std_macro_f1)
        << ")  baseline " << percent(s.mean_baseline) << "  score " << std::fixed << std::setprecision(3)
        << s.mean_leakage_score << "  verdict " << to_string(s.verdict) << "\n";
    worst = std::max(worst, s.mean_leakage_score);
  }

  if (!o.no_text) {
    const auto scan = scan_discriminative_tokens(d, o.min_df);
    json top = json::array();
    json excluding = json::array();
    for (std::size_t i = 0; i < scan.tokens.size(); ++i) {
      const auto& t = scan.tokens[i];
      json tj{{"token", t.token},
              {"doc_freq", t.doc_freq},
              {"max_abs_log_odds", t.max_abs_log_odds},
              {"top_label", t.top_label},
              {"excluded_labels", t.excluded_labels}};
      if (i < 25) top.push_back(tj);
      if (t.label_excluding() && excluding.size() < 100) excluding.push_back(tj);
    }
    json keyword = json{{"min_df", o.min_df},
                        {"skipped_empty_text", scan.skipped_empty},
                        {"tokens_scanned", scan.tokens.size()},
                        {"top_tokens", std::move(top)},
                        {"label_excluding", std::move(excluding)}};
    if (!o.keywords.empty()) {
      const auto table = keyword_label_table(d, o.keywords);
      json kt = json::object();
      for (const auto& [k, counts] : table.rows) {
        json row = json::object();
        for (std::size_t i = 0; i < counts.size(); ++i) row[d.label_set[i]] = counts[i];
        kt[k] = std::move(row);
      }
      keyword["keyword_table"] = std::move(kt);
    }
    bundle["keyword"] = std::move(keyword);
    if (!o.tokens_csv.empty()) write_file(o.tokens_csv, token_stats_csv(scan));
    if (!o.scatter_csv.empty()) {
      const std::string label = o.scatter_label.empty() ? d.label_set[0] : o.scatter_label;
      write_file(o.scatter_csv, scatter_csv(class_scatter_data(d, label)));
    }

    const auto dups = find_duplicates(d, o.dup_threshold);
    std::size_t in_exact = 0;
    json largest = json::array();
    std::vector<const DuplicateCluster*> by_size;
    for (const auto& c : dups.clusters) {
      if (c.kind == DuplicateKind::Exact) in_exact += c.member_ids.size();
      by_size.push_back(&c);
    }
    std::stable_sort(by_size.begin(), by_size.end(),
                     [](auto a, auto b) { return a->member_ids.size() > b->member_ids.size(); });
    for (std::size_t i = 0; i < std::min<std::size_t>(10, by_size.size()); ++i) {
      const auto& c = *by_size[i];
      largest.push_back(json{{"kind", c.kind == DuplicateKind::Exact ? "exact" : "near"},
                             {"size", c.member_ids.size()},
                             {"representative_id", c.representative_id},
                             {"near_member_count", c.near_member_count},
                             {"pairwise_min_jaccard", c.pairwise_min_jaccard}});
    }
    bundle["duplicates"] = json{{"threshold", o.dup_threshold},
                                {"exact_clusters", dups.count(DuplicateKind::Exact)},
                                {"near_clusters", dups.count(DuplicateKind::Near)},
                                {"records_in_exact_clusters", in_exact},
                                {"skipped_empty_text", dups.skipped_empty},
                                {"largest", std::move(largest)}};
    if (!o.duplicates_csv.empty()) write_file(o.duplicates_csv, duplicates_csv(dups));

    Split contamination_split;
    if (suite.canonical_split) {
      contamination_split = *suite.canonical_split;
    } else {
      SplitSpec spec;
      spec.ratios = suite.ratios;
      spec.seed = derive_seed(o.seed, 0);
      contamination_split = random_split(d, spec);
    }
    const auto pairs = cross_split_contamination(d, contamination_split, o.dup_threshold);
    json worst_pairs = json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(10, pairs.size()); ++i) {
      worst_pairs.push_back(json{{"train_id", pairs[i].train_id},
                                 {"other_id", pairs[i].other_id},
                                 {"other_partition", kPartitionNames[static_cast<std::size_t>(pairs[i].other_partition)]},
                                 {"jaccard", pairs[i].jaccard}});
    }
    bundle["contamination"] = json{{"pair_count", pairs.size()}, {"worst", std::move(worst_pairs)}};
    if (!o.contamination_csv.empty()) write_file(o.contamination_csv, contamination_csv(pairs));

    out << "keywords: " << scan.tokens.size() << " tokens with df >= " << o.min_df;
    std::size_t n_excluding = 0;
    for (const auto& t : scan.tokens) n_excluding += t.label_excluding();
    out << ", " << n_excluding << " label-excluding\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(5, scan.tokens.size()); ++i) {
      out << "  " << scan.tokens[i].token << " -> " << scan.tokens[i].top_label << " (|log-odds| "
          << std::setprecision(2) << scan.tokens[i].max_abs_log_odds << ")\n";
    }
    out << "duplicates: " << dups.count(DuplicateKind::Exact) << " exact clusters, "
        << dups.count(DuplicateKind::Near) << " near clusters\n";
    out << "cross-split contamination: " << pairs.size() << " pairs\n";
  }

  const bool failed = worst >= o.fail_over;
  bundle["gate"] = json{{"fail_over", o.fail_over}, {"max_leakage_score", worst}, {"failed", failed}};
  if (!o.json_out.empty()) write_file(o.json_out, bundle.dump(2) + "\n");
  out << "gate: " << (failed ? "FAIL" : "pass") << " (max leakage score " << std::setprecision(3) << worst
      << ", fail-over " << o.fail_over << ")\n";
  return failed ? kExitGateFailed : kExitOk;
}

struct SplitOptions {
  DatasetArgs data;
  std::string preset;
  std::string config_dir;
  std::vector<double> ratios;
  bool no_stratify = false;
  std::string group_by;
  bool exclude_conflicting = false;
  std::string holdout;
  std::optional<std::uint64_t> seed;
  std::string out_path;
};

inline int cmd_split(const SplitOptions& o, std::ostream& out) {
  if (!o.seed) throw Error(ErrorKind::InvalidArgument, "--seed is required");
  const Dataset d = o.data.load();
  Split split;
  if (!o.preset.empty()) {
    const auto registry = load_presets(config_dir(o.config_dir));
    auto it = registry.find(o.preset);
    if (it == registry.end()) throw Error(ErrorKind::InvalidArgument, "unknown preset '" + o.preset + "'");
    split = apply_preset(d, it->second, *o.seed);
  } else {
    SplitSpec spec;
    spec.seed = *o.seed;
    if (!o.ratios.empty()) {
      if (o.ratios.size() != 3) throw Error(ErrorKind::RatioError, "--ratios takes train,dev,test");
      spec.ratios = {o.ratios[0], o.ratios[1], o.ratios[2]};
    }
    spec.stratify = !o.no_stratify;
    if (!o.group_by.empty()) spec.group_by = o.group_by;
    spec.exclude_conflicting_groups = o.exclude_conflicting;
    if (!o.holdout.empty()) {
      const auto eq = o.holdout.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::InvalidArgument, "--holdout takes field=value");
      spec.holdout = std::make_pair(o.holdout.substr(0, eq), o.holdout.substr(eq + 1));
    }
    split = make_split(d, spec);
  }
  export_split(split, o.out_path);
  out << "split " << (split.preset.empty() ? "custom" : split.preset) << " of " << d.name << " (seed "
      << *o.seed << ")\n";
  print_distribution(out, d, split.train_ids, "train");
  print_distribution(out, d, split.dev_ids, "dev");
  print_distribution(out, d, split.test_ids, "test");
  if (split.excluded_count) out << "  excluded " << split.excluded_count << " records\n";
  for (const auto& w : split.warnings) out << "  warning: " << w << "\n";
  out << "wrote " << o.out_path << "\n";
  return kExitOk;
}

struct EvalOptions {
  DatasetArgs data;
  std::string split_file;
  std::string pred_file;
  bool exclude_missing = false;
  std::string json_out;
};

inline void print_eval(std::ostream& out, const EvalResult& r) {
  out << std::fixed << std::setprecision(1);
  for (const auto& [label, m] : r.per_class) {
    out << "  " << std::left << std::setw(14) << label << std::right << " P " << std::setw(5)
        << 100 * m.precision << "  R " << std::setw(5) << 100 * m.recall << "  F1 " << std::setw(5) << 100 * m.f1
        << "  n=" << m.support << "\n";
  }
  out << "macro F1 " << percent(r.macro_f1) << "  accuracy " << percent(r.accuracy) << "  evaluated "
      << r.n_evaluated << "  missing " << r.n_missing_predictions << "\n";
}

inline int cmd_eval(const EvalOptions& o, std::ostream& out) {
  const Dataset d = o.data.load();
  const Split split = import_split(o.split_file, d);
  const auto r = evaluate_prediction_file(d, split, o.pred_file,
                                          o.exclude_missing ? MissingMode::Exclude : MissingMode::Wrong);
  print_eval(out, r);
  if (!o.json_out.empty()) {
    json j = r.to_json();
    j["toolkit_version"] = kToolkitVersion;
    j["missing_mode"] = o.exclude_missing ? "exclude" : "wrong";
    write_file(o.json_out, j.dump(2) + "\n");
  }
  return kExitOk;
}

struct AggregateOptions {
  DatasetArgs data;
  std::string pred_file;
  std::size_t min_tweets = 3;
  std::string tie = "label-order";
  std::string split_file;
  std::string out_path;
};

inline int cmd_aggregate(const AggregateOptions& o, std::ostream& out) {
  const Dataset d = o.data.load();
  auto preds = load_predictions(o.pred_file);
  if (!o.split_file.empty()) {
    const Split split = import_split(o.split_file, d);
    const std::unordered_set<std::string> test(split.test_ids.begin(), split.test_ids.end());
    std::erase_if(preds, [&](const Prediction& p) { return !test.contains(p.id); });
  }
  std::unordered_map<std::string, std::string> article_of;
  for (const auto& r : d.records) {
    if (r.article_id) article_of.emplace(r.id, *r.article_id);
  }
  VoteTieRule rule = VoteTieRule::LabelOrder;
  if (o.tie == "abstain") {
    rule = VoteTieRule::Abstain;
  } else if (o.tie != "label-order") {
    throw Error(ErrorKind::InvalidArgument, "--tie must be label-order or abstain");
  }
  const auto articles = aggregate_article_votes(preds, article_of, d.label_set, o.min_tweets, rule);
  std::string csv_out = "article_id,label\n";
  for (const auto& [a, l] : articles) csv_out += csv::join_row({a, l});
  write_file(o.out_path, csv_out);
  out << articles.size() << " articles with >= " << o.min_tweets << " predicted tweets\n";

  const auto gold_articles = article_gold_labels(d);
  LabelMap gold, pred;
  for (const auto& [a, l] : articles) {
    if (auto it = gold_articles.find(a); it != gold_articles.end()) {
      gold.emplace(a, it->second);
      pred.emplace(a, l);
    }
  }
  if (!gold.empty()) {
    out << "article-level evaluation:\n";
    print_eval(out, evaluate(gold, pred, d.label_set));
  }
  out << "wrote " << o.out_path << "\n";
  return kExitOk;
}

struct RebalanceCliOptions {
  DatasetArgs data;
  std::string pool;
  std::string anchor_label;
  std::string window = "7d";
  std::optional<std::uint64_t> seed;
  std::size_t k = 3;
  bool no_measure = false;
  std::string out_path;
  std::string report_path;
};

inline int cmd_rebalance(const RebalanceCliOptions& o, std::ostream& out) {
  if (!o.seed) throw Error(ErrorKind::InvalidArgument, "--seed is required");
  const Dataset d = o.data.load();
  Manifest pool_manifest = o.data.manifest.empty() ? Manifest{} : load_manifest(o.data.manifest);
  pool_manifest.labels.clear();  // pool may carry a subset or superset of labels; foreign labels are skipped
  const Dataset pool = load_dataset(o.pool, pool_manifest);
  RebalanceOptions opt;
  opt.window_ms = parse_duration_ms(o.window);
  opt.seed = *o.seed;
  opt.k = o.k;
  opt.measure_leakage = !o.no_measure;
  const auto result = time_rebalance(d, pool, o.anchor_label, opt);
  save_dataset(result.dataset, o.out_path);
  const auto& r = result.report;
  if (!o.report_path.empty()) write_file(o.report_path, r.to_json().dump(2) + "\n");
  out << "replaced " << r.replaced << " records, rejected " << r.rejected_ids.size() << " (window " << o.window
      << ")\n";
  out << "time-profile distance to '" << o.anchor_label << "': " << std::fixed << std::setprecision(3)
      << r.histogram_distance_before << " -> " << r.histogram_distance_after << "\n";
  if (r.leak_before && r.leak_after) {
    out << "k=" << o.k << " leakage score: " << r.leak_before->leakage_score << " ("
        << to_string(r.leak_before->verdict) << ") -> " << r.leak_after->leakage_score << " ("
        << to_string(r.leak_after->verdict) << ")\n";
  }
  out << "wrote " << o.out_path << "\n";
  return kExitOk;
}

struct InspectOptions {
  DatasetArgs data;
  std::string json_out;
  std::string histogram_csv;
  std::string bucket = "1d";
};

inline int cmd_inspect(const InspectOptions& o, std::ostream& out) {
  const auto bucket_ms = parse_duration_ms(o.bucket);
  if (bucket_ms <= 0) throw Error(ErrorKind::InvalidArgument, "--bucket must be positive");
  const Dataset d = o.data.load();
  json fp = fingerprint(d);
  const auto violations = validate(d);
  fp["violations"] = violations.size();
  fp["toolkit_version"] = kToolkitVersion;
  out << "dataset " << d.name << ": " << d.size() << " records\n";
  const auto dist = label_distribution(d);
  for (std::size_t i = 0; i < dist.counts.size(); ++i) out << "  " << dist.labels[i] << ": " << dist.counts[i] << "\n";
  if (!fp["time_span_ms"].is_null()) {
    out << "  time span (ms): " << fp["time_span_ms"]["min"].get<std::int64_t>() << " .. "
        << fp["time_span_ms"]["max"].get<std::int64_t>() << "\n";
  }
  out << "  pre-snowflake ids: " << fp["pre_snowflake_ids"].get<std::size_t>() << "\n";
  out << "  violations: " << violations.size() << "\n";
  if (!o.histogram_csv.empty()) {
    write_file(o.histogram_csv, histogram_csv(timestamp_histogram(d, bucket_ms)));
  }
  if (!o.json_out.empty()) write_file(o.json_out, fp.dump(2) + "\n");
  return kExitOk;
}

/// Entry point. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"leakaudit: audit labeled social-media datasets for confound-driven leakage"};
  app.name("leakaudit");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolkitVersion));

  AuditOptions audit;
  auto* a = app.add_subcommand("audit", "ID-digit, keyword, and duplicate leakage audit with a CI gate");
  audit.data.add_to(*a);
  a->add_option("--k", audit.k_list, "Digit prefix lengths")->delimiter(',');
  a->add_option("--n-splits", audit.n_splits, "Generated splits when no --split is given");
  a->add_option("--split", audit.split_file, "Canonical split file");
  a->add_option("--seed", audit.seed, "Seed for generated splits and forests");
  a->add_option("--fail-over", audit.fail_over, "Exit 2 when a leakage score reaches this value");
  a->add_option("--thresholds", audit.thresholds, "Verdict thresholds mild,moderate,severe")->delimiter(',');
  a->add_option("--trees", audit.trees, "Forest size");
  a->add_option("--max-depth", audit.max_depth, "Tree depth limit");
  a->add_option("--min-df", audit.min_df, "Minimum document frequency for the token scan");
  a->add_option("--keywords", audit.keywords, "Keywords for the label-count table")->delimiter(',');
  a->add_option("--dup-threshold", audit.dup_threshold, "Jaccard threshold for near duplicates");
  a->add_flag("--no-text", audit.no_text, "Skip keyword and duplicate audits");
  a->add_option("--json", audit.json_out, "Write the audit bundle JSON here");
  a->add_option("--tokens-csv", audit.tokens_csv, "Export token statistics");
  a->add_option("--duplicates-csv", audit.duplicates_csv, "Export duplicate clusters");
  a->add_option("--contamination-csv", audit.contamination_csv, "Export cross-split duplicate pairs");
  a->add_option("--scatter-csv", audit.scatter_csv, "Export label-vs-rest token frequencies");
  a->add_option("--scatter-label", audit.scatter_label, "Target label for --scatter-csv");

  SplitOptions split;
  auto* s = app.add_subcommand("split", "Generate a split file from a preset or explicit flags");
  split.data.add_to(*s);
  s->add_option("--preset", split.preset, "Named protocol");
  s->add_option("--config-dir", split.config_dir, std::string("Preset directory (default $") + kConfigDirEnv + ")");
  s->add_option("--ratios", split.ratios, "train,dev,test")->delimiter(',');
  s->add_flag("--no-stratify", split.no_stratify, "Plain shuffle instead of per-label apportioning");
  s->add_option("--group-by", split.group_by, "Keep records sharing this field together");
  s->add_flag("--exclude-conflicting", split.exclude_conflicting, "Drop groups with mixed labels");
  s->add_option("--holdout", split.holdout, "field=value held out as the test partition");
  s->add_option("--seed", split.seed, "Seed (required)");
  s->add_option("--out", split.out_path, "Split file to write")->required();

  EvalOptions eval;
  auto* e = app.add_subcommand("eval", "Score a prediction file on a split's test partition");
  eval.data.add_to(*e);
  e->add_option("--split", eval.split_file, "Split file")->required();
  e->add_option("--pred", eval.pred_file, "Predictions (.csv with id,label or .jsonl)")->required();
  e->add_flag("--exclude-missing", eval.exclude_missing, "Drop test ids without predictions");
  e->add_option("--json", eval.json_out, "Write the result JSON here");

  AggregateOptions agg;
  auto* g = app.add_subcommand("aggregate", "Majority-vote tweet predictions into article predictions");
  agg.data.add_to(*g);
  g->add_option("--pred", agg.pred_file, "Tweet predictions")->required();
  g->add_option("--min-tweets", agg.min_tweets, "Minimum predicted tweets per article");
  g->add_option("--tie", agg.tie, "label-order or abstain");
  g->add_option("--split", agg.split_file, "Restrict to this split's test ids");
  g->add_option("--out", agg.out_path, "Article predictions CSV")->required();

  RebalanceCliOptions reb;
  auto* r = app.add_subcommand("rebalance", "Replace non-anchor records with time-matched pool records");
  reb.data.add_to(*r);
  r->add_option("--pool", reb.pool, "Candidate replacement records")->required();
  r->add_option("--anchor-label", reb.anchor_label, "Label whose records are kept")->required();
  r->add_option("--window", reb.window, "Maximum time distance (e.g. 7d, 12h, 5000ms)");
  r->add_option("--seed", reb.seed, "Seed (required)");
  r->add_option("--k", reb.k, "Digit prefix length for the before/after ID test");
  r->add_flag("--no-measure", reb.no_measure, "Skip the before/after ID test");
  r->add_option("--out", reb.out_path, "Rebalanced dataset (.jsonl or .csv)")->required();
  r->add_option("--report", reb.report_path, "Write the report JSON here");

  InspectOptions ins;
  auto* i = app.add_subcommand("inspect", "Dataset fingerprint and validation summary");
  ins.data.add_to(*i);
  i->add_option("--json", ins.json_out, "Write the fingerprint JSON here");
  i->add_option("--histogram-csv", ins.histogram_csv, "Export per-label timestamp histogram");
  i->add_option("--bucket", ins.bucket, "Histogram bucket width (e.g. 1d)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForVersion&) {
    out << kToolkitVersion << "\n";
    return kExitOk;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::Success&) {
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "leakaudit: " << ex.what() << "\n";
    return kExitError;
  }

  try {
    if (*a) return cmd_audit(audit, out);
    if (*s) return cmd_split(split, out);
    if (*e) return cmd_eval(eval, out);
    if (*g) return cmd_aggregate(agg, out);
    if (*r) return cmd_rebalance(reb, out);
    if (*i) return cmd_inspect(ins, out);
  } catch (const Error& ex) {
    err << "leakaudit: " << ex.what() << "\n";
    return kExitError;
  } catch (const std::exception& ex) {
    err << "leakaudit: " << ex.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace leakaudit::cli
