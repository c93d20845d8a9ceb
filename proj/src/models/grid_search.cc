#include <cmath>

#include "attrib/error.h"
#include "attrib/metrics.h"
#include "attrib/model.h"
#include "attrib/parallel.h"
#include "attrib/rng.h"

namespace attrib {
namespace {

// Fold index per sample. Classification folds are stratified by dealing
// each shuffled class round-robin.
std::vector<std::size_t> AssignFolds(const Dataset& data, int k_folds, std::uint64_t seed) {
  const std::size_t n = data.n_samples();
  std::vector<std::vector<std::size_t>> groups;
  if (data.task == Task::kClassification) {
    groups.resize(data.n_classes());
    for (std::size_t i = 0; i < n; ++i) {
      groups[static_cast<std::size_t>(data.target[i])].push_back(i);
    }
  } else {
    groups.emplace_back();
    for (std::size_t i = 0; i < n; ++i) groups[0].push_back(i);
  }
  Rng rng(seed);
  std::vector<std::size_t> fold(n);
  std::size_t next = 0;
  for (auto& group : groups) {
    rng.Shuffle(std::span<std::size_t>(group));
    for (std::size_t i : group) fold[i] = next++ % static_cast<std::size_t>(k_folds);
  }
  return fold;
}

}  // namespace

std::vector<Hyperparameters> ParamGrid::Expand() const {
  std::vector<Hyperparameters> points = {{}};
  for (const auto& [name, values] : axes) {
    if (values.empty()) return {};
    std::vector<Hyperparameters> next;
    for (const auto& point : points) {
      for (double v : values) {
        Hyperparameters p = point;
        p[name] = v;
        next.push_back(std::move(p));
      }
    }
    points = std::move(next);
  }
  return points;
}

ParamGrid DefaultGrid(Family family) {
  ParamGrid grid{family, {}};
  switch (family) {
    case Family::kDecisionTree:
      grid.axes["max_depth"] = {3, 5, 8, 0};
      break;
    case Family::kRandomForest:
      grid.axes["n_trees"] = {50, 100};
      grid.axes["max_depth"] = {5, 0};
      break;
    case Family::kGradientBoosting:
      grid.axes["n_trees"] = {50, 100};
      grid.axes["learning_rate"] = {0.1, 0.3};
      break;
    case Family::kKnn:
      grid.axes["k"] = {3, 5, 11};
      break;
    case Family::kLogReg:
      grid.axes["l2"] = {1e-4, 1e-2, 1.0};
      break;
    case Family::kMlp:
      grid.axes["hidden"] = {8, 32};
      grid.axes["learning_rate"] = {0.01, 0.1};
      break;
  }
  return grid;
}

double ScoreModel(const Model& model, const Dataset& data, std::string_view metric) {
  const auto& info = GetMetric(metric);
  CheckMetricTask(metric, data.task);
  const std::vector<double> predicted = model.Predict(data.features);
  std::vector<double> scores;
  if (info.needs_scores) scores = model.Response(data.features);
  return EvaluateMetric(metric, data.target, predicted, scores);
}

GridSearchResult GridSearch(const ParamGrid& grid, const Dataset& train, int k_folds,
                            std::string_view metric, std::uint64_t seed, int workers) {
  const auto points = grid.Expand();
  if (points.empty()) throw ValidationError("parameter grid is empty");
  const auto& info = GetMetric(metric);
  CheckMetricTask(metric, train.task);
  if (k_folds < 2 || static_cast<std::size_t>(k_folds) > train.n_samples()) {
    throw ValidationError("k_folds must lie in [2, n_samples]");
  }
  for (const auto& point : points) ValidateConfig({grid.family, point, seed});

  const auto fold = AssignFolds(train, k_folds, DeriveSeed(seed, 0xf01d));
  const std::size_t n_folds = static_cast<std::size_t>(k_folds);
  std::vector<double> fold_scores(points.size() * n_folds, 0.0);

  ParallelFor(fold_scores.size(), workers, [&](std::size_t job) {
    const std::size_t p = job / n_folds, f = job % n_folds;
    std::vector<std::size_t> fit_rows, eval_rows;
    for (std::size_t i = 0; i < train.n_samples(); ++i) {
      (fold[i] == f ? eval_rows : fit_rows).push_back(i);
    }
    const auto model = Fit({grid.family, points[p], seed}, train.Subset(fit_rows));
    fold_scores[job] = ScoreModel(*model, train.Subset(eval_rows), metric);
  });

  GridSearchResult result;
  std::size_t best = 0;
  for (std::size_t p = 0; p < points.size(); ++p) {
    double mean = 0.0;
    for (std::size_t f = 0; f < n_folds; ++f) mean += fold_scores[p * n_folds + f];
    mean /= static_cast<double>(n_folds);
    result.scores.emplace_back(points[p], mean);
    const double current = result.scores[best].second;
    const bool better = std::isnan(current) ? !std::isnan(mean)
                        : info.higher_is_better ? mean > current
                                                : mean < current;
    if (p > 0 && better) best = p;
  }
  result.best = {grid.family, points[best], seed};
  result.best_score = result.scores[best].second;
  result.model = Fit(result.best, train);
  return result;
}

}  // namespace attrib
