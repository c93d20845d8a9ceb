#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "attrib/data.h"
#include "attrib/error.h"
#include "attrib/text.h"

namespace attrib {
namespace {

std::vector<std::string> ReadRecord(const std::string& line) {
  std::vector<std::string> cells = SplitString(line, ',');
  for (auto& cell : cells) cell = std::string(Trim(cell));
  return cells;
}

// Orders class labels numerically when all of them are numbers.
std::vector<std::string> OrderLabels(std::vector<std::string> labels) {
  const bool numeric = std::all_of(labels.begin(), labels.end(), [](const auto& l) {
    return ParseNumber(l).has_value();
  });
  if (numeric) {
    std::stable_sort(labels.begin(), labels.end(), [](const auto& a, const auto& b) {
      return *ParseNumber(a) < *ParseNumber(b);
    });
  }
  return labels;
}

}  // namespace

Dataset LoadCsv(const std::filesystem::path& path, std::string_view target_column,
                Task task) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open CSV file '" + path.string() + "'");
  return ReadCsv(in, target_column, task);
}

Dataset ReadCsv(std::istream& in, std::string_view target_column, Task task) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("CSV file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  // Strip a UTF-8 byte order mark.
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const std::vector<std::string> header = ReadRecord(line);

  std::size_t target_index = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == target_column) target_index = i;
  }
  if (target_index == header.size()) {
    throw ValidationError("target column '" + std::string(target_column) +
                          "' not found in CSV header");
  }

  std::vector<std::vector<std::string>> rows;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty()) continue;
    auto cells = ReadRecord(line);
    if (cells.size() != header.size()) {
      throw ValidationError("row " + std::to_string(line_number) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c].empty() || cells[c] == "NA" || cells[c] == "NaN" ||
          cells[c] == "nan") {
        throw ValidationError("row " + std::to_string(line_number) +
                              ": missing value in column '" + header[c] + "'");
      }
    }
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw ValidationError("CSV file has no data rows");

  Dataset out;
  out.task = task;
  out.target_name = header[target_index];
  const std::size_t n = rows.size();
  const std::size_t n_features = header.size() - 1;
  out.features = Matrix(n, n_features);
  out.target.resize(n);

  std::size_t f = 0;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == target_index) continue;
    ColumnMeta meta;
    meta.name = header[c];
    std::vector<double> values(n);
    bool numeric = true;
    for (std::size_t r = 0; r < n && numeric; ++r) {
      const auto v = ParseNumber(rows[r][c]);
      if (v) values[r] = *v; else numeric = false;
    }
    if (!numeric) {
      meta.kind = ColumnMeta::Kind::kCategorical;
      std::map<std::string, std::size_t> index;
      for (std::size_t r = 0; r < n; ++r) {
        auto [it, inserted] = index.emplace(rows[r][c], meta.categories.size());
        if (inserted) meta.categories.push_back(rows[r][c]);
        values[r] = static_cast<double>(it->second);
      }
    }
    out.features.set_column(f, values);
    out.columns.push_back(std::move(meta));
    ++f;
  }

  if (task == Task::kClassification) {
    std::vector<std::string> labels;
    for (const auto& row : rows) {
      const auto& label = row[target_index];
      if (std::find(labels.begin(), labels.end(), label) == labels.end()) {
        labels.push_back(label);
      }
    }
    out.class_labels = OrderLabels(std::move(labels));
    for (std::size_t r = 0; r < n; ++r) {
      const auto it = std::find(out.class_labels.begin(), out.class_labels.end(),
                                rows[r][target_index]);
      out.target[r] = static_cast<double>(it - out.class_labels.begin());
    }
  } else {
    for (std::size_t r = 0; r < n; ++r) {
      const auto v = ParseNumber(rows[r][target_index]);
      if (!v) {
        throw ValidationError("row " + std::to_string(r + 2) +
                              ": regression target '" + rows[r][target_index] +
                              "' is not numeric");
      }
      out.target[r] = *v;
    }
  }
  out.Validate();
  return out;
}

void WriteCsv(const Dataset& dataset, std::ostream& out) {
  for (const auto& column : dataset.columns) out << column.name << ',';
  out << dataset.target_name << '\n';
  for (std::size_t r = 0; r < dataset.n_samples(); ++r) {
    for (std::size_t c = 0; c < dataset.n_features(); ++c) {
      const double v = dataset.features(r, c);
      const auto& column = dataset.columns[c];
      if (column.categorical()) {
        out << column.categories.at(static_cast<std::size_t>(v));
      } else {
        out << FormatNumber(v);
      }
      out << ',';
    }
    const double y = dataset.target[r];
    if (dataset.task == Task::kClassification) {
      out << dataset.class_labels.at(static_cast<std::size_t>(y));
    } else {
      out << FormatNumber(y);
    }
    out << '\n';
  }
}

void WriteCsv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write CSV file '" + path.string() + "'");
  WriteCsv(dataset, out);
  if (!out) throw Error("failed writing CSV file '" + path.string() + "'");
}

}  // namespace attrib
