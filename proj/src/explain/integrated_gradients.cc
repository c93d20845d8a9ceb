#include <cmath>

#include "attrib/error.h"
#include "attrib/explain.h"

namespace attrib {

IntegratedGradientsResult IntegratedGradients(const Model& model,
                                              std::span<const double> x,
                                              std::span<const double> baseline,
                                              int n_steps) {
  const std::size_t m = model.n_features();
  if (x.size() != m || baseline.size() != m) {
    throw ValidationError("integrated gradients input width does not match the model");
  }
  if (!model.differentiable()) {
    throw ValidationError("integrated gradients need a differentiable model");
  }
  if (n_steps < 2) throw ValidationError("n_steps must be at least 2");

  std::vector<double> total(m, 0.0), point(m);
  for (int k = 0; k < n_steps; ++k) {
    const double alpha = (k + 0.5) / n_steps;
    for (std::size_t i = 0; i < m; ++i) point[i] = baseline[i] + alpha * (x[i] - baseline[i]);
    const std::vector<double> g = model.Gradient(point);
    for (std::size_t i = 0; i < m; ++i) total[i] += g[i];
  }

  IntegratedGradientsResult result;
  auto& attr = result.attribution;
  attr.method = "ig";
  attr.values.resize(m);
  attr.dispersion.assign(m, 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    attr.values[i] = (x[i] - baseline[i]) * total[i] / n_steps;
    sum += attr.values[i];
  }
  result.completeness_gap = std::abs(sum - (model.Response(x) - model.Response(baseline)));
  return result;
}

}  // namespace attrib
