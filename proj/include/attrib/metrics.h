#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attrib/data.h"

namespace attrib {

// Rows are actual classes, columns predicted classes.
struct ConfusionMatrix {
  std::size_t n_classes = 0;
  std::vector<std::size_t> counts;  // row-major n_classes x n_classes

  std::size_t at(std::size_t actual, std::size_t predicted) const {
    return counts[actual * n_classes + predicted];
  }
  std::size_t total() const;
  std::size_t trace() const;
};

struct MetricsReport {
  Task task = Task::kClassification;
  // Metric name -> value. Ratios that evaluate to 0/0 are stored as 0 and
  // their names listed in `undefined`.
  std::map<std::string, double> values;
  std::set<std::string> undefined;
  ConfusionMatrix confusion;  // classification only

  double at(std::string_view name) const;
};

// Binary metrics treat class index 1 as positive. `scores` are class-1
// probabilities; pass an empty span to skip AUC. Multiclass inputs get
// accuracy plus macro-averaged precision, recall, specificity and F1.
MetricsReport ClassificationReport(std::span<const double> y_true,
                                   std::span<const double> y_pred,
                                   std::span<const double> scores,
                                   std::size_t n_classes = 2);

// Pearson, r2, mae, mse, mape. MAPE skips samples whose y_true is 0.
MetricsReport RegressionReport(std::span<const double> y_true,
                               std::span<const double> y_pred);

// Mann-Whitney estimate of the ROC AUC with ties counted as one half.
// Returns nullopt-like NaN when one class is absent.
double RocAuc(std::span<const double> y_true, std::span<const double> scores);

struct MetricInfo {
  std::string_view name;
  Task task;
  bool higher_is_better;
  bool needs_scores;  // evaluated on class-1 probabilities instead of labels
};

// Looks up a metric by name; throws ValidationError for unknown names.
const MetricInfo& GetMetric(std::string_view name);
// Throws ValidationError unless the metric applies to `task`.
void CheckMetricTask(std::string_view name, Task task);
// Default model-selection metric: auc / r2.
std::string_view DefaultMetric(Task task);

// Computes one metric. For classification metrics `y_pred` are labels and
// `scores` class-1 probabilities.
double EvaluateMetric(std::string_view name, std::span<const double> y_true,
                      std::span<const double> y_pred,
                      std::span<const double> scores);

}  // namespace attrib
