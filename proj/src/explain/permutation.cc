#include <cmath>

#include "attrib/error.h"
#include "attrib/explain.h"
#include "attrib/metrics.h"
#include "attrib/rng.h"

namespace attrib {

AttributionVector PermutationImportance(const Model& model, const Dataset& data,
                                        std::string_view metric, int n_repeats,
                                        std::uint64_t seed) {
  if (data.n_samples() == 0) throw ValidationError("permutation importance needs data");
  if (n_repeats < 1) throw ValidationError("n_repeats must be at least 1");
  const auto& info = GetMetric(metric);
  CheckMetricTask(metric, data.task);
  const double sign = info.higher_is_better ? 1.0 : -1.0;
  const double baseline = ScoreModel(model, data, metric);

  const std::size_t n = data.n_samples(), m = data.n_features();
  AttributionVector out;
  out.method = "permutation";
  out.features = data.feature_names();
  out.values.assign(m, 0.0);
  out.dispersion.assign(m, 0.0);

  Dataset shuffled = data;
  std::vector<std::size_t> order(n);
  std::vector<double> drops(static_cast<std::size_t>(n_repeats));
  for (std::size_t j = 0; j < m; ++j) {
    const std::vector<double> original = data.features.column(j);
    Rng rng(DeriveSeed(seed, j));
    for (int r = 0; r < n_repeats; ++r) {
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      rng.Shuffle(std::span<std::size_t>(order));
      for (std::size_t i = 0; i < n; ++i) shuffled.features(i, j) = original[order[i]];
      drops[r] = sign * (baseline - ScoreModel(model, shuffled, metric));
    }
    shuffled.features.set_column(j, original);
    double mean = 0.0;
    for (double d : drops) mean += d;
    mean /= n_repeats;
    double var = 0.0;
    for (double d : drops) var += (d - mean) * (d - mean);
    out.values[j] = mean;
    out.dispersion[j] = std::sqrt(var / n_repeats);
  }
  return out;
}

}  // namespace attrib
