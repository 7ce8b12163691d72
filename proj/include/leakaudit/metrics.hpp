#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "common.hpp"
#include "core.hpp"
#include "csv.hpp"

namespace leakaudit {

using LabelMap = std::unordered_map<std::string, std::string>;

/// How gold ids without a prediction are scored.
enum class MissingMode {
  Wrong,    // counted as a miss for the gold class (default)
  Exclude,  // dropped from evaluation
};

/// Rows are gold, columns predicted, both in LabelSet order. Missing
/// predictions are tracked per gold class outside the square.
struct ConfusionMatrix {
  std::size_t n_classes = 0;
  std::vector<std::uint64_t> counts;
  std::vector<std::uint64_t> missing;

  explicit ConfusionMatrix(std::size_t k = 0) : n_classes(k), counts(k * k, 0), missing(k, 0) {}

  std::uint64_t at(std::size_t gold, std::size_t pred) const { return counts[gold * n_classes + pred]; }
  void add(std::size_t gold, std::size_t pred) { ++counts[gold * n_classes + pred]; }
  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    for (auto c : missing) t += c;
    return t;
  }
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalResult {
  LabelSet labels;
  std::vector<std::pair<std::string, ClassMetrics>> per_class;  // reported classes, LabelSet order
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::size_t n_evaluated = 0;
  std::size_t n_missing_predictions = 0;
  ConfusionMatrix confusion;

  const ClassMetrics* find(std::string_view label) const {
    for (const auto& [name, m] : per_class) {
      if (name == label) return &m;
    }
    return nullptr;
  }

  json to_json() const {
    json classes = json::object();
    for (const auto& [name, m] : per_class) {
      classes[name] = json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
    }
    json matrix = json::array();
    for (std::size_t g = 0; g < confusion.n_classes; ++g) {
      json row = json::array();
      for (std::size_t p = 0; p < confusion.n_classes; ++p) row.push_back(confusion.at(g, p));
      matrix.push_back(std::move(row));
    }
    return json{{"per_class", std::move(classes)},
                {"macro_f1", macro_f1},
                {"accuracy", accuracy},
                {"n_evaluated", n_evaluated},
                {"n_missing_predictions", n_missing_predictions},
                {"labels", labels.labels()},
                {"confusion", std::move(matrix)},
                {"missing_by_gold", confusion.missing}};
  }
};

/// Metrics from a confusion matrix. Per-class F1 is 0 when precision + recall
/// is 0. Macro F1 averages the classes that occur in gold or in predictions.
inline EvalResult metrics_from_confusion(const ConfusionMatrix& cm, const LabelSet& labels) {
  EvalResult r;
  r.labels = labels;
  r.confusion = cm;
  const std::size_t k = cm.n_classes;
  std::uint64_t correct = 0;
  std::uint64_t total = 0;
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    std::uint64_t tp = cm.at(c, c);
    std::uint64_t gold = cm.missing[c];
    std::uint64_t predicted = 0;
    for (std::size_t j = 0; j < k; ++j) {
      gold += cm.at(c, j);
      predicted += cm.at(j, c);
    }
    correct += tp;
    total += gold;
    r.n_missing_predictions += cm.missing[c];
    if (gold == 0 && predicted == 0) continue;
    ClassMetrics m;
    m.support = gold;
    m.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    m.recall = gold ? static_cast<double>(tp) / static_cast<double>(gold) : 0.0;
    m.f1 = (m.precision + m.recall) > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    f1_sum += m.f1;
    r.per_class.emplace_back(labels[c], m);
  }
  r.n_evaluated = total;
  r.accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  r.macro_f1 = r.per_class.empty() ? 0.0 : f1_sum / static_cast<double>(r.per_class.size());
  return r;
}

/// Index-level evaluation; `pred[i] == labels.size()` marks a missing prediction.
inline EvalResult evaluate_indices(std::span<const std::size_t> gold, std::span<const std::size_t> pred,
                                   const LabelSet& labels, MissingMode mode = MissingMode::Wrong) {
  ConfusionMatrix cm(labels.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (pred[i] >= labels.size()) {
      if (mode == MissingMode::Wrong) ++cm.missing[gold[i]];
      continue;
    }
    cm.add(gold[i], pred[i]);
  }
  auto r = metrics_from_confusion(cm, labels);
  if (mode == MissingMode::Exclude) {
    for (std::size_t i = 0; i < gold.size(); ++i) r.n_missing_predictions += pred[i] >= labels.size();
  }
  return r;
}

/// Scores predictions against gold over the gold ids. Predictions for ids
/// outside gold are ignored.
inline EvalResult evaluate(const LabelMap& gold, const LabelMap& pred, const LabelSet& labels,
                           MissingMode mode = MissingMode::Wrong) {
  if (gold.empty()) throw Error(ErrorKind::EmptyInput, "no gold labels");
  std::vector<std::size_t> g, p;
  g.reserve(gold.size());
  p.reserve(gold.size());
  for (const auto& [id, label] : pred) {
    if (!labels.contains(label)) throw Error(ErrorKind::UnknownLabel, "prediction for " + id + ": '" + label + "'");
  }
  for (const auto& [id, label] : gold) {
    const auto gi = labels.index_of(label);
    if (!gi) throw Error(ErrorKind::UnknownLabel, "gold label for " + id + ": '" + label + "'");
    g.push_back(*gi);
    auto it = pred.find(id);
    p.push_back(it == pred.end() ? labels.size() : *labels.index_of(it->second));
  }
  return evaluate_indices(g, p, labels, mode);
}

// ---------------------------------------------------------------------------
// Prediction files

struct Prediction {
  std::string id;
  std::string label;
};

/// CSV with header `id,label` (other columns ignored) or JSONL objects with
/// "id" and "label"; chosen by extension. Duplicate ids are an error.
inline std::vector<Prediction> parse_predictions(std::string_view content, bool is_csv) {
  std::vector<Prediction> out;
  std::unordered_set<std::string> seen;
  auto add = [&](Prediction p, std::size_t line) {
    if (!seen.insert(p.id).second) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": duplicate prediction for id " + p.id);
    }
    out.push_back(std::move(p));
  };
  if (is_csv) {
    const auto rows = csv::parse(content);
    if (rows.empty()) throw Error(ErrorKind::Parse, "line 1: missing header");
    const auto& h = rows.front().fields;
    const auto id_col = std::find(h.begin(), h.end(), "id") - h.begin();
    const auto label_col = std::find(h.begin(), h.end(), "label") - h.begin();
    if (id_col == static_cast<std::ptrdiff_t>(h.size()) || label_col == static_cast<std::ptrdiff_t>(h.size())) {
      throw Error(ErrorKind::Parse, "line 1: header must contain id and label");
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& row = rows[i];
      if (row.fields.size() == 1 && row.fields.front().empty()) continue;
      if (row.fields.size() != h.size()) {
        throw Error(ErrorKind::Parse, "line " + std::to_string(row.line) + ": wrong number of fields");
      }
      add({row.fields[static_cast<std::size_t>(id_col)], row.fields[static_cast<std::size_t>(label_col)]}, row.line);
    }
    return out;
  }
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    const auto nl = content.find('\n', pos);
    auto line = content.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? content.size() : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    try {
      const auto j = json::parse(line);
      const auto& id = j.at("id");
      add({id.is_string() ? id.get<std::string>() : std::to_string(id.get<std::uint64_t>()),
           j.at("label").get<std::string>()},
          line_no);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, where + e.what());
    }
  }
  return out;
}

inline std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
  const auto ext = path.extension();
  if (ext != ".csv" && ext != ".jsonl" && ext != ".json") {
    throw Error(ErrorKind::Parse, "cannot infer prediction format from extension of " + path.string());
  }
  return parse_predictions(read_file(path), ext == ".csv");
}

inline std::string predictions_to_csv(const std::vector<Prediction>& preds) {
  std::string out = "id,label\n";
  for (const auto& p : preds) out += csv::join_row({p.id, p.label});
  return out;
}

// ---------------------------------------------------------------------------
// Article-level majority vote

enum class VoteTieRule {
  LabelOrder,  // earliest label in the LabelSet wins
  Abstain,     // tied articles are omitted
};

/// Article label = modal predicted label of its tweets. Articles with fewer
/// than `min_tweets` predicted tweets are omitted. Predicted ids without an
/// article mapping are ignored.
inline std::map<std::string, std::string> aggregate_article_votes(
    const std::vector<Prediction>& tweet_preds, const std::unordered_map<std::string, std::string>& article_of,
    const LabelSet& labels, std::size_t min_tweets = 3, VoteTieRule tie_rule = VoteTieRule::LabelOrder) {
  std::map<std::string, std::vector<std::size_t>> votes;
  for (const auto& p : tweet_preds) {
    auto art = article_of.find(p.id);
    if (art == article_of.end()) continue;
    const auto li = labels.index_of(p.label);
    if (!li) throw Error(ErrorKind::UnknownLabel, "prediction for " + p.id + ": '" + p.label + "'");
    auto& v = votes[art->second];
    if (v.empty()) v.assign(labels.size(), 0);
    ++v[*li];
  }
  std::map<std::string, std::string> out;
  for (const auto& [article, v] : votes) {
    std::size_t n = 0;
    for (auto c : v) n += c;
    if (n < min_tweets) continue;
    const auto best = std::max_element(v.begin(), v.end());
    if (tie_rule == VoteTieRule::Abstain && std::count(v.begin(), v.end(), *best) > 1) continue;
    out.emplace(article, labels[static_cast<std::size_t>(best - v.begin())]);
  }
  return out;
}

/// Gold article labels: articles whose tweets agree on a single label.
inline std::map<std::string, std::string> article_gold_labels(const Dataset& dataset) {
  std::map<std::string, std::string> out;
  std::unordered_set<std::string> conflicted;
  for (const auto& r : dataset.records) {
    if (!r.article_id || conflicted.contains(*r.article_id)) continue;
    auto [it, inserted] = out.emplace(*r.article_id, r.label);
    if (!inserted && it->second != r.label) {
      conflicted.insert(*r.article_id);
      out.erase(it);
    }
  }
  return out;
}

}  // namespace leakaudit
