#include <algorithm>

#include "attrib/data.h"
#include "attrib/error.h"

namespace attrib {

std::vector<std::string> CategoricalColumns(const Dataset& dataset) {
  std::vector<std::string> names;
  for (const auto& column : dataset.columns) {
    if (column.categorical()) names.push_back(column.name);
  }
  return names;
}

Dataset OneHotEncode(const Dataset& dataset,
                     const std::vector<std::string>& columns) {
  std::vector<bool> encode(dataset.n_features(), false);
  for (const auto& name : columns) {
    const std::size_t index = dataset.FeatureIndex(name);
    if (!dataset.columns[index].categorical()) {
      throw ValidationError("column '" + name + "' is not categorical");
    }
    encode[index] = true;
  }
  if (columns.empty()) return dataset;

  std::vector<ColumnMeta> out_columns;
  for (std::size_t c = 0; c < dataset.n_features(); ++c) {
    const auto& column = dataset.columns[c];
    if (!encode[c]) {
      out_columns.push_back(column);
      continue;
    }
    for (const auto& category : column.categories) {
      out_columns.push_back({column.name + "=" + category,
                             ColumnMeta::Kind::kNumeric, {}});
    }
  }

  Dataset out;
  out.task = dataset.task;
  out.target = dataset.target;
  out.class_labels = dataset.class_labels;
  out.target_name = dataset.target_name;
  out.columns = std::move(out_columns);
  out.features = Matrix(dataset.n_samples(), out.columns.size());
  for (std::size_t r = 0; r < dataset.n_samples(); ++r) {
    std::size_t o = 0;
    for (std::size_t c = 0; c < dataset.n_features(); ++c) {
      const double v = dataset.features(r, c);
      if (!encode[c]) {
        out.features(r, o++) = v;
        continue;
      }
      const std::size_t k = dataset.columns[c].categories.size();
      for (std::size_t j = 0; j < k; ++j) {
        out.features(r, o++) = static_cast<std::size_t>(v) == j ? 1.0 : 0.0;
      }
    }
  }
  out.Validate();
  return out;
}

}  // namespace attrib
