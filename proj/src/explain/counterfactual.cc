#include <algorithm>
#include <cmath>
#include <numeric>

#include "attrib/error.h"
#include "attrib/explain.h"
#include "attrib/rng.h"

namespace attrib {
namespace {

constexpr int kBisectionSteps = 20;
constexpr double kDuplicateTolerance = 1e-4;

class Search {
 public:
  Search(const Model& model, std::size_t target, int budget)
      : model_(model), target_(target), budget_(budget), row_(1, model.n_features()) {}

  bool exhausted() const { return used_ >= budget_; }

  // Returns false once the evaluation budget is gone.
  bool IsTarget(std::span<const double> point, bool& result) {
    if (used_ >= budget_) return false;
    ++used_;
    std::copy(point.begin(), point.end(), row_.row(0).begin());
    result = static_cast<std::size_t>(model_.Predict(row_)[0]) == target_;
    return true;
  }

 private:
  const Model& model_;
  std::size_t target_;
  int budget_;
  int used_ = 0;
  Matrix row_;
};

}  // namespace

CounterfactualResult Counterfactual(const Model& model, std::span<const double> x,
                                    std::size_t target_class, const Matrix& reference,
                                    const CounterfactualOptions& options,
                                    std::uint64_t seed) {
  const std::size_t m = model.n_features();
  if (model.task() != Task::kClassification) {
    throw ValidationError("counterfactuals need a classification model");
  }
  if (x.size() != m || reference.cols() != m) {
    throw ValidationError("counterfactual input width does not match the model");
  }
  if (reference.empty()) throw ValidationError("counterfactuals need reference data");
  if (target_class >= model.n_classes()) throw ValidationError("target class out of range");
  if (options.n_counterfactuals < 1) throw ValidationError("n_counterfactuals must be positive");

  CounterfactualResult result;
  result.change_frequency.method = "counterfactual";
  result.change_frequency.values.assign(m, 0.0);
  result.change_frequency.dispersion.assign(m, 0.0);

  std::vector<double> lo(m), hi(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::vector<double> col = reference.column(j);
    const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
    lo[j] = *mn;
    hi[j] = *mx;
  }

  Search search(model, target_class, options.budget);
  bool hit = false;
  if (!search.IsTarget(x, hit)) {
    result.exhausted = true;
    result.counterfactuals = Matrix(0, m);
    return result;
  }
  if (hit) {
    result.counterfactuals = Matrix(1, m, {x.begin(), x.end()});
    return result;
  }

  std::vector<std::vector<double>> found;
  auto duplicate = [&](const std::vector<double>& point) {
    for (const auto& other : found) {
      bool same = true;
      for (std::size_t j = 0; j < m && same; ++j) {
        const double range = hi[j] > lo[j] ? hi[j] - lo[j] : 1.0;
        same = std::abs(point[j] - other[j]) / range <= kDuplicateTolerance;
      }
      if (same) return true;
    }
    return false;
  };

  Rng rng(seed);
  std::vector<std::size_t> order(m);
  std::vector<double> candidate(m);
  const auto wanted = static_cast<std::size_t>(options.n_counterfactuals);
  while (found.size() < wanted && !search.exhausted()) {
    std::iota(order.begin(), order.end(), 0);
    const std::size_t k = 1 + rng.Index(m);
    for (std::size_t a = 0; a < k; ++a) std::swap(order[a], order[a + rng.Index(m - a)]);
    std::copy(x.begin(), x.end(), candidate.begin());
    for (std::size_t a = 0; a < k; ++a) {
      candidate[order[a]] = rng.Uniform(lo[order[a]], hi[order[a]]);
    }
    if (!search.IsTarget(candidate, hit)) break;
    if (!hit) continue;

    // Pull each changed feature back to x, or as close as bisection allows.
    bool complete = true;
    for (std::size_t a = 0; a < k && complete; ++a) {
      const std::size_t j = order[a];
      const double changed = candidate[j];
      if (changed == x[j]) continue;
      candidate[j] = x[j];
      if (!search.IsTarget(candidate, hit)) {
        complete = false;
        candidate[j] = changed;
        break;
      }
      if (hit) continue;
      double t_lo = 0.0, t_hi = 1.0;
      for (int step = 0; step < kBisectionSteps; ++step) {
        const double t = 0.5 * (t_lo + t_hi);
        candidate[j] = x[j] + t * (changed - x[j]);
        if (!search.IsTarget(candidate, hit)) {
          complete = false;
          break;
        }
        (hit ? t_hi : t_lo) = t;
      }
      candidate[j] = x[j] + t_hi * (changed - x[j]);
    }
    // A partly refined point still hits the target; keep it only when the
    // search has nothing better.
    if (!complete && !found.empty()) break;
    if (!duplicate(candidate)) found.push_back(candidate);
  }

  std::vector<double> l1(found.size(), 0.0);
  for (std::size_t f = 0; f < found.size(); ++f) {
    for (std::size_t j = 0; j < m; ++j) l1[f] += std::abs(found[f][j] - x[j]);
  }
  std::vector<std::size_t> rank(found.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(),
                   [&](std::size_t a, std::size_t b) { return l1[a] < l1[b]; });

  result.exhausted = found.empty();
  result.counterfactuals = Matrix(0, m);
  for (std::size_t f : rank) result.counterfactuals.AppendRow(found[f]);
  if (!found.empty()) {
    for (const auto& point : found) {
      for (std::size_t j = 0; j < m; ++j) {
        if (std::abs(point[j] - x[j]) > 1e-9) result.change_frequency.values[j] += 1.0;
      }
    }
    for (double& v : result.change_frequency.values) v /= static_cast<double>(found.size());
  }
  return result;
}

}  // namespace attrib
