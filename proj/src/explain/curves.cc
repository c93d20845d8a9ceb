#include <algorithm>
#include <cmath>

#include "attrib/error.h"
#include "attrib/explain.h"

namespace attrib {
namespace {

std::vector<double> SortedColumn(const Dataset& data, std::size_t feature) {
  if (feature >= data.n_features()) throw ValidationError("feature index out of range");
  if (data.n_samples() == 0) throw ValidationError("curves need at least one sample");
  std::vector<double> column = data.features.column(feature);
  std::sort(column.begin(), column.end());
  return column;
}

// Distinct quantiles at levels k / (points - 1).
std::vector<double> QuantileGrid(const std::vector<double>& sorted, int points,
                                 const std::string& name) {
  if (points < 2) throw ValidationError("a curve needs at least 2 grid points");
  std::vector<double> grid;
  for (int k = 0; k < points; ++k) {
    const double q = Quantile(sorted, static_cast<double>(k) / (points - 1));
    if (grid.empty() || q > grid.back()) grid.push_back(q);
  }
  if (grid.size() < 2) throw ValidationError("feature '" + name + "' is constant");
  return grid;
}

}  // namespace

double Quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

std::pair<Curve, Curve> PdpIce(const Model& model, const Dataset& data,
                               std::size_t feature, int grid_size) {
  const auto names = data.feature_names();
  const std::vector<double> grid = QuantileGrid(SortedColumn(data, feature), grid_size,
                                                names[feature]);
  const std::size_t n = data.n_samples(), g = grid.size(), m = data.n_features();

  Matrix rows(n * g, m);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t k = 0; k < g; ++k) {
      auto row = rows.row(s * g + k);
      const auto src = data.features.row(s);
      std::copy(src.begin(), src.end(), row.begin());
      row[feature] = grid[k];
    }
  }
  const std::vector<double> out = model.Response(rows);

  Curve ice;
  ice.feature = feature;
  ice.name = names[feature];
  ice.grid = grid;
  ice.ice = Matrix(n, g, out);
  ice.sample_ids.resize(n);
  for (std::size_t s = 0; s < n; ++s) ice.sample_ids[s] = s;

  Curve pdp;
  pdp.feature = feature;
  pdp.name = names[feature];
  pdp.grid = grid;
  pdp.response.assign(g, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t k = 0; k < g; ++k) pdp.response[k] += ice.ice(s, k);
  }
  for (double& v : pdp.response) v /= static_cast<double>(n);
  ice.response = pdp.response;
  return {std::move(pdp), std::move(ice)};
}

Curve Ale(const Model& model, const Dataset& data, std::size_t feature, int n_bins) {
  if (n_bins < 1) throw ValidationError("ALE needs at least one bin");
  const auto names = data.feature_names();
  std::vector<double> edges = QuantileGrid(SortedColumn(data, feature), n_bins + 1,
                                           names[feature]);
  const std::size_t n = data.n_samples(), m = data.n_features();

  // Bin k (1-based) holds edges[k-1] < v <= edges[k]; the minimum joins bin 1.
  auto bin_of = [&](double v) {
    const auto it = std::lower_bound(edges.begin(), edges.end(), v);
    return std::max<std::size_t>(1, static_cast<std::size_t>(it - edges.begin()));
  };
  std::vector<std::size_t> bins(n);
  std::vector<std::size_t> counts;
  for (;;) {
    counts.assign(edges.size(), 0);
    for (std::size_t s = 0; s < n; ++s) {
      bins[s] = bin_of(data.features(s, feature));
      ++counts[bins[s]];
    }
    std::size_t empty = 0;
    for (std::size_t k = 2; k < edges.size(); ++k) {
      if (counts[k] == 0) {
        empty = k;
        break;
      }
    }
    if (empty == 0) break;
    edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(empty - 1));
  }

  Matrix rows(2 * n, m);
  for (std::size_t s = 0; s < n; ++s) {
    const auto src = data.features.row(s);
    auto lo = rows.row(2 * s), hi = rows.row(2 * s + 1);
    std::copy(src.begin(), src.end(), lo.begin());
    std::copy(src.begin(), src.end(), hi.begin());
    lo[feature] = edges[bins[s] - 1];
    hi[feature] = edges[bins[s]];
  }
  const std::vector<double> out = model.Response(rows);

  const std::size_t k_bins = edges.size() - 1;
  std::vector<double> effect(k_bins + 1, 0.0);
  for (std::size_t s = 0; s < n; ++s) effect[bins[s]] += out[2 * s + 1] - out[2 * s];
  std::vector<double> accumulated(k_bins + 1, 0.0);
  for (std::size_t k = 1; k <= k_bins; ++k) {
    accumulated[k] = accumulated[k - 1] + effect[k] / static_cast<double>(counts[k]);
  }
  double center = 0.0;
  for (std::size_t k = 1; k <= k_bins; ++k) {
    center += static_cast<double>(counts[k]) * 0.5 * (accumulated[k - 1] + accumulated[k]);
  }
  center /= static_cast<double>(n);

  Curve curve;
  curve.feature = feature;
  curve.name = names[feature];
  curve.grid = edges;
  curve.response.resize(k_bins + 1);
  for (std::size_t k = 0; k <= k_bins; ++k) curve.response[k] = accumulated[k] - center;
  curve.bin_counts.assign(counts.begin() + 1, counts.end());
  return curve;
}

}  // namespace attrib
