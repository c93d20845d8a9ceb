#include <algorithm>
#include <cmath>
#include <set>

#include "attrib/data.h"
#include "attrib/error.h"
#include "attrib/text.h"

namespace attrib {

std::string_view TaskName(Task task) {
  return task == Task::kClassification ? "classification" : "regression";
}

Task ParseTask(std::string_view name) {
  const std::string lower = ToLower(name);
  if (lower == "classification") return Task::kClassification;
  if (lower == "regression") return Task::kRegression;
  throw ValidationError("unknown task kind '" + std::string(name) +
                        "' (expected classification or regression)");
}

std::vector<std::string> Dataset::feature_names() const {
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (const auto& column : columns) names.push_back(column.name);
  return names;
}

std::size_t Dataset::FeatureIndex(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  throw ValidationError("unknown column '" + std::string(name) + "'");
}

Dataset Dataset::Subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.features = features.SelectRows(rows);
  out.target.reserve(rows.size());
  for (std::size_t r : rows) out.target.push_back(target[r]);
  out.columns = columns;
  out.task = task;
  out.class_labels = class_labels;
  out.target_name = target_name;
  return out;
}

void Dataset::Validate() const {
  if (features.rows() != target.size()) {
    throw Error("feature row count does not match target length");
  }
  if (columns.size() != features.cols()) {
    throw Error("column metadata does not match feature count");
  }
  std::set<std::string> seen;
  for (const auto& column : columns) {
    if (!seen.insert(column.name).second) {
      throw Error("duplicate column name '" + column.name + "'");
    }
    if (column.categorical() && column.categories.empty()) {
      throw Error("categorical column '" + column.name + "' has no categories");
    }
  }
  for (double v : features.data()) {
    if (!std::isfinite(v)) throw Error("non-finite feature value");
  }
  if (task == Task::kClassification) {
    for (double y : target) {
      if (y < 0 || y != std::floor(y) ||
          static_cast<std::size_t>(y) >= class_labels.size()) {
        throw Error("classification target outside class labels");
      }
    }
  } else {
    for (double y : target) {
      if (!std::isfinite(y)) throw Error("non-finite regression target");
    }
  }
}

}  // namespace attrib
