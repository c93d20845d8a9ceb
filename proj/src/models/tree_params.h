#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>

#include "attrib/model.h"
#include "attrib/models/tree.h"

namespace attrib {

inline TreeParams TreeParamsFrom(const ModelConfig& config, int default_depth) {
  TreeParams params;
  params.max_depth = static_cast<int>(config.Get("max_depth", default_depth));
  params.min_samples_split = static_cast<int>(config.Get("min_samples_split", 2));
  params.min_samples_leaf = static_cast<int>(config.Get("min_samples_leaf", 1));
  params.max_features = static_cast<int>(config.Get("max_features", 0));
  return params;
}

inline std::vector<std::size_t> AllRows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

// Mean of tree leaf payloads for classification forests.
inline void AddLeaf(std::span<double> acc, const std::vector<double>& leaf) {
  for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += leaf[k];
}

}  // namespace attrib
