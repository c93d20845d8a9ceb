#include <algorithm>
#include <cmath>
#include <numeric>

#include "attrib/data.h"
#include "attrib/error.h"
#include "attrib/rng.h"

namespace attrib {

DatasetSplit Split(const Dataset& dataset, double test_fraction,
                   std::uint64_t seed, bool stratify) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test fraction must lie in (0, 1)");
  }
  const std::size_t n = dataset.n_samples();
  Rng rng(seed);

  std::vector<std::vector<std::size_t>> groups;
  if (stratify && dataset.task == Task::kClassification) {
    groups.resize(dataset.n_classes());
    for (std::size_t i = 0; i < n; ++i) {
      groups[static_cast<std::size_t>(dataset.target[i])].push_back(i);
    }
  } else {
    groups.emplace_back(n);
    std::iota(groups[0].begin(), groups[0].end(), std::size_t{0});
  }

  DatasetSplit out;
  for (auto& group : groups) {
    rng.Shuffle(std::span<std::size_t>(group));
    const auto n_test = static_cast<std::size_t>(
        std::llround(static_cast<double>(group.size()) * test_fraction));
    out.test_indices.insert(out.test_indices.end(), group.begin(),
                            group.begin() + n_test);
    out.train_indices.insert(out.train_indices.end(), group.begin() + n_test,
                             group.end());
  }
  if (out.train_indices.empty() || out.test_indices.empty()) {
    throw ValidationError("test fraction " + std::to_string(test_fraction) +
                          " leaves an empty " +
                          (out.train_indices.empty() ? "train" : "test") +
                          " partition");
  }
  std::sort(out.train_indices.begin(), out.train_indices.end());
  std::sort(out.test_indices.begin(), out.test_indices.end());
  out.train = dataset.Subset(out.train_indices);
  out.test = dataset.Subset(out.test_indices);
  return out;
}

}  // namespace attrib
