#include "mvkt/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "mvkt/errors.hpp"

namespace mvkt {

double MetricsReport::get(const std::string& name) const {
  if (name == "acc") return accuracy;
  if (name == "f1_w") return f1_weighted;
  if (name == "f1_m") return f1_macro;
  if (name == "f1") {
    if (!f1) throw DomainError("metric 'f1' is defined for binary tasks only");
    return *f1;
  }
  if (name == "auc") {
    if (!auc) throw DomainError("metric 'auc' is defined for binary tasks only");
    return *auc;
  }
  throw DomainError("unknown metric '" + name + "'");
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["task"] = task == TaskKind::kBinary ? "binary" : "multiclass";
  j["count"] = count;
  j["acc"] = accuracy;
  if (f1) j["f1"] = *f1;
  j["f1_w"] = f1_weighted;
  j["f1_m"] = f1_macro;
  if (auc) j["auc"] = *auc;
  j["confusion"] = confusion;
  return j;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw DimensionError("roc_auc: " + std::to_string(scores.size()) + " scores for " +
                         std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  // Sum of 1-based average ranks of the positives.
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum += avg_rank;
        ++pos;
      }
    }
    i = j;
  }
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) throw DomainError("roc_auc: undefined with a single class present");
  const double u = rank_sum - 0.5 * static_cast<double>(pos) * static_cast<double>(pos + 1);
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

std::vector<double> per_class_f1(const std::vector<std::vector<std::size_t>>& confusion) {
  const std::size_t c = confusion.size();
  std::vector<double> f1(c, 0.0);
  for (std::size_t k = 0; k < c; ++k) {
    std::size_t tp = confusion[k][k], fp = 0, fn = 0;
    for (std::size_t o = 0; o < c; ++o) {
      if (o == k) continue;
      fp += confusion[o][k];
      fn += confusion[k][o];
    }
    const std::size_t denom = 2 * tp + fp + fn;
    f1[k] = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
  return f1;
}

MetricsReport compute_metrics(std::span<const int> predictions, std::span<const double> scores,
                              std::span<const int> labels, std::size_t num_classes,
                              TaskKind task) {
  const std::size_t n = labels.size();
  if (predictions.size() != n) {
    throw DimensionError("compute_metrics: " + std::to_string(predictions.size()) +
                         " predictions for " + std::to_string(n) + " labels");
  }
  if (n == 0) throw DomainError("compute_metrics: no samples");
  if (task == TaskKind::kBinary && num_classes != 2) {
    throw DomainError("compute_metrics: binary task with " + std::to_string(num_classes) + " classes");
  }
  MetricsReport r;
  r.task = task;
  r.count = n;
  r.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i], p = predictions[i];
    if (y < 0 || p < 0 || static_cast<std::size_t>(y) >= num_classes ||
        static_cast<std::size_t>(p) >= num_classes) {
      throw DomainError("compute_metrics: class index out of range at sample " + std::to_string(i));
    }
    r.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(p)]++;
    if (y == p) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(n);

  const auto f1 = per_class_f1(r.confusion);
  double weighted = 0.0, macro = 0.0;
  std::size_t present = 0;
  for (std::size_t k = 0; k < num_classes; ++k) {
    std::size_t support = 0, predicted = 0;
    for (std::size_t o = 0; o < num_classes; ++o) {
      support += r.confusion[k][o];
      predicted += r.confusion[o][k];
    }
    weighted += static_cast<double>(support) * f1[k];
    if (support + predicted > 0) {
      macro += f1[k];
      ++present;
    }
  }
  r.f1_weighted = weighted / static_cast<double>(n);
  r.f1_macro = macro / static_cast<double>(present);

  if (task == TaskKind::kBinary) {
    r.f1 = f1[1];
    if (scores.size() != n) {
      throw DimensionError("compute_metrics: binary AUC needs one score per sample");
    }
    r.auc = roc_auc(scores, labels);
  }
  return r;
}

}  // namespace mvkt
