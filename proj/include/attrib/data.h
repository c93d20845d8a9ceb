#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attrib/matrix.h"

namespace attrib {

enum class Task { kClassification, kRegression };

std::string_view TaskName(Task task);
Task ParseTask(std::string_view name);

struct ColumnMeta {
  enum class Kind { kNumeric, kCategorical };

  std::string name;
  Kind kind = Kind::kNumeric;
  // Category labels in first-appearance order. A categorical cell is stored
  // in the feature matrix as its index into this list.
  std::vector<std::string> categories;

  bool categorical() const { return kind == Kind::kCategorical; }
};

// A tabular dataset: feature matrix, target and column metadata.
//
// Classification targets hold class indices (0, 1, ...) into `class_labels`.
struct Dataset {
  Matrix features;
  std::vector<double> target;
  std::vector<ColumnMeta> columns;
  Task task = Task::kClassification;
  std::vector<std::string> class_labels;
  std::string target_name = "target";

  std::size_t n_samples() const { return features.rows(); }
  std::size_t n_features() const { return features.cols(); }
  std::size_t n_classes() const { return class_labels.size(); }

  std::vector<std::string> feature_names() const;
  // Index of a feature column by name; throws ValidationError when absent.
  std::size_t FeatureIndex(std::string_view name) const;

  Dataset Subset(std::span<const std::size_t> rows) const;

  // Checks every structural invariant; throws Error on violation.
  void Validate() const;
};

// --- CSV ------------------------------------------------------------------

// Reads a comma-separated file with a mandatory header row. Cells that fail
// numeric parsing make their column categorical. Blank cells are rejected
// with the offending line number.
//
// Classification labels are ordered numerically when every label parses as
// a number, otherwise by first appearance.
Dataset LoadCsv(const std::filesystem::path& path, std::string_view target_column,
                Task task);
Dataset ReadCsv(std::istream& in, std::string_view target_column, Task task);

// Writes features followed by the target column. Numbers use the shortest
// round-trip representation, categorical cells their label.
void WriteCsv(const Dataset& dataset, const std::filesystem::path& path);
void WriteCsv(const Dataset& dataset, std::ostream& out);

// --- Encoding and splitting -----------------------------------------------

// Replaces each named categorical column by one binary column per category,
// named "<column>=<category>", at the column's original position.
Dataset OneHotEncode(const Dataset& dataset,
                     const std::vector<std::string>& columns);

// Names of all categorical feature columns.
std::vector<std::string> CategoricalColumns(const Dataset& dataset);

struct DatasetSplit {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

// Seeded hold-out split. With `stratify` on a classification dataset each
// class contributes round(count * test_fraction) samples to the test part.
DatasetSplit Split(const Dataset& dataset, double test_fraction,
                   std::uint64_t seed, bool stratify);

// --- Rule-labelled synthetic data -----------------------------------------

struct RulePredicate {
  std::size_t feature_index = 0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  // Closed interval test.
  bool Holds(double value) const { return value >= lower && value <= upper; }
};

// Conjunction of interval predicates over features F1..Fn uniform on [0, 1].
struct RuleSpec {
  std::vector<RulePredicate> predicates;
  std::size_t n_features = 0;

  int Label(std::span<const double> row) const;
  void Validate() const;
};

// Rule file grammar (one statement per line, '#' starts a comment):
//
//   n_features = 17
//   F3, 0.7, 0.9
//   F10, 0.6, inf
//
// Feature names are 1-based "F<k>"; bounds accept "inf" / "-inf".
RuleSpec ParseRuleSpec(std::string_view text);
RuleSpec LoadRuleSpec(const std::filesystem::path& path);
std::string FormatRuleSpec(const RuleSpec& spec);

// Features i.i.d. uniform on [0, 1], columns F1..Fn, binary target "class".
Dataset GenerateSynthetic(const RuleSpec& spec, std::size_t n_samples,
                          std::uint64_t seed);

}  // namespace attrib
