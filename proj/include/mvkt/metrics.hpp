#pragma once

#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

namespace mvkt {

enum class TaskKind { kBinary, kMulticlass };

struct MetricsReport {
  TaskKind task = TaskKind::kBinary;
  std::size_t count = 0;
  double accuracy = 0.0;
  // F1 of class 1 (binary tasks only).
  std::optional<double> f1;
  double f1_weighted = 0.0;
  double f1_macro = 0.0;
  // Binary tasks only.
  std::optional<double> auc;
  // confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;

  // Named metric lookup: "acc", "f1", "f1_w", "f1_m", "auc".
  double get(const std::string& name) const;
  nlohmann::json to_json() const;
};

// Area under the ROC curve via the Mann-Whitney rank statistic, ties counted
// half. Throws DomainError when only one class is present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// Per-class F1 from a confusion matrix; 0 where precision and recall are both undefined.
std::vector<double> per_class_f1(const std::vector<std::vector<std::size_t>>& confusion);

// `scores` holds the class-1 score per sample and is required for binary tasks.
// F1-macro averages over classes present in labels or predictions.
MetricsReport compute_metrics(std::span<const int> predictions, std::span<const double> scores,
                              std::span<const int> labels, std::size_t num_classes,
                              TaskKind task);

}  // namespace mvkt
