#pragma once

#include <filesystem>
#include <vector>

#include "core.hpp"
#include "metrics.hpp"
#include "split.hpp"

namespace leakaudit {

/// Scores predictions over the split's test partition.
inline EvalResult evaluate_predictions(const Dataset& dataset, const Split& split,
                                       const std::vector<Prediction>& predictions,
                                       MissingMode mode = MissingMode::Wrong) {
  const auto index = index_ids(dataset);
  LabelMap gold;
  for (const auto& id : split.test_ids) {
    if (auto it = index.find(id); it != index.end()) gold.emplace(id, dataset.records[it->second].label);
  }
  if (gold.empty()) throw Error(ErrorKind::EmptySplit, "split has no test records in this dataset");
  LabelMap pred;
  for (const auto& p : predictions) {
    if (!dataset.label_set.contains(p.label)) {
      throw Error(ErrorKind::UnknownLabel, "prediction for " + p.id + ": '" + p.label + "'");
    }
    if (gold.contains(p.id)) pred.emplace(p.id, p.label);
  }
  return evaluate(gold, pred, dataset.label_set, mode);
}

inline EvalResult evaluate_prediction_file(const Dataset& dataset, const Split& split,
                                           const std::filesystem::path& path,
                                           MissingMode mode = MissingMode::Wrong) {
  return evaluate_predictions(dataset, split, load_predictions(path), mode);
}

}  // namespace leakaudit
