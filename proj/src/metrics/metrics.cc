#include "attrib/metrics.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "attrib/error.h"

namespace attrib {
namespace {

constexpr std::array<MetricInfo, 11> kMetrics = {{
    {"accuracy", Task::kClassification, true, false},
    {"precision", Task::kClassification, true, false},
    {"recall", Task::kClassification, true, false},
    {"specificity", Task::kClassification, true, false},
    {"f1", Task::kClassification, true, false},
    {"auc", Task::kClassification, true, true},
    {"pearson", Task::kRegression, true, false},
    {"r2", Task::kRegression, true, false},
    {"mae", Task::kRegression, false, false},
    {"mse", Task::kRegression, false, false},
    {"mape", Task::kRegression, false, false},
}};

// a / b, or 0 with the name recorded as undefined when b == 0.
double Ratio(double a, double b, std::string_view name, MetricsReport& report) {
  if (b == 0.0) {
    report.undefined.emplace(name);
    return 0.0;
  }
  return a / b;
}

void CheckLengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw ValidationError("metric inputs differ in length (" + std::to_string(a) +
                          " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t sum = 0;
  for (std::size_t k = 0; k < n_classes; ++k) sum += at(k, k);
  return sum;
}

double MetricsReport::at(std::string_view name) const {
  const auto it = values.find(std::string(name));
  if (it == values.end()) throw Error("metric '" + std::string(name) + "' not in report");
  return it->second;
}

double RocAuc(std::span<const double> y_true, std::span<const double> scores) {
  CheckLengths(y_true.size(), scores.size());
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Midranks (1-based) over tie groups.
  double positive_rank_sum = 0.0;
  double n_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (y_true[order[k]] == 1.0) {
        positive_rank_sum += midrank;
        n_pos += 1.0;
      }
    }
    i = j + 1;
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) return std::nan("");
  return (positive_rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

MetricsReport ClassificationReport(std::span<const double> y_true,
                                   std::span<const double> y_pred,
                                   std::span<const double> scores,
                                   std::size_t n_classes) {
  CheckLengths(y_true.size(), y_pred.size());
  if (!scores.empty()) CheckLengths(y_true.size(), scores.size());
  MetricsReport report;
  report.task = Task::kClassification;
  auto& cm = report.confusion;
  cm.n_classes = n_classes;
  cm.counts.assign(n_classes * n_classes, 0);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const auto actual = static_cast<std::size_t>(y_true[i]);
    const auto predicted = static_cast<std::size_t>(y_pred[i]);
    if (actual >= n_classes || predicted >= n_classes) {
      throw ValidationError("class label outside [0, n_classes)");
    }
    ++cm.counts[actual * n_classes + predicted];
  }
  const double total = static_cast<double>(cm.total());
  report.values["accuracy"] =
      Ratio(static_cast<double>(cm.trace()), total, "accuracy", report);

  if (n_classes == 2) {
    const double tn = cm.at(0, 0), fp = cm.at(0, 1);
    const double fn = cm.at(1, 0), tp = cm.at(1, 1);
    const double precision = Ratio(tp, tp + fp, "precision", report);
    const double recall = Ratio(tp, tp + fn, "recall", report);
    report.values["precision"] = precision;
    report.values["recall"] = recall;
    report.values["specificity"] = Ratio(tn, tn + fp, "specificity", report);
    report.values["f1"] = Ratio(2.0 * precision * recall, precision + recall, "f1", report);
    if (!scores.empty()) {
      const double auc = RocAuc(y_true, scores);
      if (std::isnan(auc)) {
        report.undefined.insert("auc");
        report.values["auc"] = 0.0;
      } else {
        report.values["auc"] = auc;
      }
    }
    return report;
  }

  // Macro averages; a class contributes 0 to a ratio it leaves undefined.
  double precision = 0, recall = 0, specificity = 0, f1 = 0;
  for (std::size_t k = 0; k < n_classes; ++k) {
    double tp = cm.at(k, k), fp = 0, fn = 0;
    for (std::size_t j = 0; j < n_classes; ++j) {
      if (j == k) continue;
      fp += cm.at(j, k);
      fn += cm.at(k, j);
    }
    const double tn = total - tp - fp - fn;
    const double p = Ratio(tp, tp + fp, "precision", report);
    const double r = Ratio(tp, tp + fn, "recall", report);
    precision += p;
    recall += r;
    specificity += Ratio(tn, tn + fp, "specificity", report);
    f1 += Ratio(2 * p * r, p + r, "f1", report);
  }
  const double k = static_cast<double>(n_classes);
  report.values["precision"] = precision / k;
  report.values["recall"] = recall / k;
  report.values["specificity"] = specificity / k;
  report.values["f1"] = f1 / k;
  return report;
}

MetricsReport RegressionReport(std::span<const double> y_true,
                               std::span<const double> y_pred) {
  CheckLengths(y_true.size(), y_pred.size());
  if (y_true.size() < 2) throw ValidationError("regression metrics need at least 2 samples");
  MetricsReport report;
  report.task = Task::kRegression;
  const double n = static_cast<double>(y_true.size());
  const double mean_true = std::accumulate(y_true.begin(), y_true.end(), 0.0) / n;
  const double mean_pred = std::accumulate(y_pred.begin(), y_pred.end(), 0.0) / n;
  double ss_res = 0, ss_tot = 0, abs_err = 0, cov = 0, var_pred = 0;
  double pct = 0, n_pct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double e = y_true[i] - y_pred[i];
    ss_res += e * e;
    abs_err += std::abs(e);
    ss_tot += (y_true[i] - mean_true) * (y_true[i] - mean_true);
    cov += (y_true[i] - mean_true) * (y_pred[i] - mean_pred);
    var_pred += (y_pred[i] - mean_pred) * (y_pred[i] - mean_pred);
    if (y_true[i] != 0.0) {
      pct += std::abs(e / y_true[i]);
      n_pct += 1;
    }
  }
  report.values["mse"] = ss_res / n;
  report.values["mae"] = abs_err / n;
  report.values["mape"] = Ratio(pct, n_pct, "mape", report);
  if (ss_tot == 0.0) {
    report.undefined.insert("r2");
    report.undefined.insert("pearson");
    report.values["r2"] = 0.0;
    report.values["pearson"] = 0.0;
  } else {
    report.values["r2"] = 1.0 - ss_res / ss_tot;
    report.values["pearson"] =
        Ratio(cov, std::sqrt(ss_tot * var_pred), "pearson", report);
  }
  return report;
}

const MetricInfo& GetMetric(std::string_view name) {
  for (const auto& info : kMetrics) {
    if (info.name == name) return info;
  }
  throw ValidationError("unknown metric '" + std::string(name) + "'");
}

void CheckMetricTask(std::string_view name, Task task) {
  if (GetMetric(name).task != task) {
    throw ValidationError("metric '" + std::string(name) + "' does not apply to " +
                          std::string(TaskName(task)));
  }
}

std::string_view DefaultMetric(Task task) {
  return task == Task::kClassification ? "auc" : "r2";
}

double EvaluateMetric(std::string_view name, std::span<const double> y_true,
                      std::span<const double> y_pred,
                      std::span<const double> scores) {
  const auto& info = GetMetric(name);
  if (info.task == Task::kClassification) {
    std::size_t n_classes = 2;
    for (double y : y_true) n_classes = std::max(n_classes, static_cast<std::size_t>(y) + 1);
    for (double y : y_pred) n_classes = std::max(n_classes, static_cast<std::size_t>(y) + 1);
    if (info.needs_scores) {
      const double auc = RocAuc(y_true, scores);
      return std::isnan(auc) ? 0.5 : auc;
    }
    return ClassificationReport(y_true, y_pred, {}, n_classes).at(name);
  }
  return RegressionReport(y_true, y_pred).at(name);
}

}  // namespace attrib
