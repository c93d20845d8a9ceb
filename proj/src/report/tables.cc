#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "attrib/error.h"
#include "attrib/report.h"
#include "attrib/text.h"

namespace attrib {
namespace {

// Quotes a CSV field when needed.
std::string Field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::size_t> DescendingOrder(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return order;
}

bool NaturalLess(const std::string& a, const std::string& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (std::isdigit(static_cast<unsigned char>(a[i])) &&
        std::isdigit(static_cast<unsigned char>(b[j]))) {
      std::size_t ei = i, ej = j;
      while (ei < a.size() && std::isdigit(static_cast<unsigned char>(a[ei]))) ++ei;
      while (ej < b.size() && std::isdigit(static_cast<unsigned char>(b[ej]))) ++ej;
      const auto da = a.substr(i, ei - i), db = b.substr(j, ej - j);
      const auto ta = da.substr(std::min(da.find_first_not_of('0'), da.size()));
      const auto tb = db.substr(std::min(db.find_first_not_of('0'), db.size()));
      if (ta.size() != tb.size()) return ta.size() < tb.size();
      if (ta != tb) return ta < tb;
      i = ei;
      j = ej;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return a.size() - i < b.size() - j;
}

}  // namespace

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw Error("failed writing " + path.string());
}

std::string AttributionCsv(const AttributionMatrix& matrix) {
  std::string out = "sample_id,feature,attribution\n";
  for (std::size_t r = 0; r < matrix.values.rows(); ++r) {
    for (std::size_t c = 0; c < matrix.values.cols(); ++c) {
      out += std::to_string(matrix.sample_ids[r]) + "," + Field(matrix.features[c]) + "," +
             FormatNumber(matrix.values(r, c)) + "\n";
    }
  }
  return out;
}

std::string GlobalCsv(const AttributionVector& global) {
  std::string out = "feature,mean_abs_attribution,std\n";
  for (std::size_t j : DescendingOrder(global.values)) {
    out += Field(global.features[j]) + "," + FormatNumber(global.values[j]) + "," +
           FormatNumber(j < global.dispersion.size() ? global.dispersion[j] : 0.0) + "\n";
  }
  return out;
}

std::string CurveCsv(const Curve& curve, bool ice) {
  std::string out = ice ? "grid_value,response,sample_id\n" : "grid_value,response\n";
  if (ice) {
    for (std::size_t s = 0; s < curve.ice.rows(); ++s) {
      for (std::size_t k = 0; k < curve.grid.size(); ++k) {
        out += FormatNumber(curve.grid[k]) + "," + FormatNumber(curve.ice(s, k)) + "," +
               std::to_string(curve.sample_ids[s]) + "\n";
      }
    }
  } else {
    for (std::size_t k = 0; k < curve.grid.size(); ++k) {
      out += FormatNumber(curve.grid[k]) + "," + FormatNumber(curve.response[k]) + "\n";
    }
  }
  return out;
}

std::string MetricsCsv(const MetricsReport& report) {
  std::string out = "metric,value\n";
  for (const auto& [name, value] : report.values) out += name + "," + FormatNumber(value) + "\n";
  return out;
}

std::string ConsensusCsv(const ConsensusReport& report) {
  std::string out = "rank,feature,score,dispersion\n";
  for (std::size_t i = 0; i < report.ranking.size(); ++i) {
    const auto& r = report.ranking[i];
    out += std::to_string(i + 1) + "," + Field(r.feature) + "," + FormatNumber(r.score) + "," +
           FormatNumber(r.dispersion) + "\n";
  }
  return out;
}

std::string ConsensusSidecar(const ConsensusReport& report) {
  nlohmann::ordered_json j;
  j["kind"] = ConsensusKindName(report.kind);
  j["subject"] = report.subject;
  if (report.filtered) {
    j["cutoff"] = report.cutoff;
  } else {
    j["cutoff"] = nullptr;
  }
  j["normalization"] = report.kind == ConsensusKind::kAttributionByMethod
                           ? "unit_l1_absolute"
                           : "rank_descending_abs";
  j["included"] = report.included;
  auto excluded = nlohmann::ordered_json::array();
  for (const auto& [id, reason] : report.excluded) {
    excluded.push_back({{"id", id}, {"reason", reason}});
  }
  j["excluded"] = excluded;
  return j.dump(2) + "\n";
}

std::string RulesCsv(const std::vector<LocalExplanation>& explanations) {
  std::string out = "sample_id,rank,rule,direction,weight,value\n";
  for (const auto& e : explanations) {
    for (std::size_t i = 0; i < e.rules.size(); ++i) {
      const auto& rule = e.rules[i];
      out += std::to_string(e.sample_id) + "," + std::to_string(i + 1) + "," +
             Field(FormatRule(rule)) + "," +
             (rule.direction == RuleDirection::kSupportsClass1 ? "class_1" : "class_0") + "," +
             FormatNumber(rule.weight) + "," + FormatNumber(e.feature_values[rule.feature]) +
             "\n";
    }
  }
  return out;
}

std::string FailedCsv(const std::string& reason) {
  std::string line = reason;
  std::replace(line.begin(), line.end(), '\n', ' ');
  return "status=failed\n" + Field(line) + "\n";
}

AttributionVector ReadGlobalCsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = SplitString(line, ',');
  if (header.size() < 2 || header[0] != "feature") {
    throw ValidationError(path.string() + " is not a global attribution table");
  }
  AttributionVector v;
  std::vector<std::pair<std::string, std::pair<double, double>>> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty()) continue;
    const auto cells = SplitString(line, ',');
    const auto value = cells.size() >= 2 ? ParseNumber(cells[1]) : std::nullopt;
    const auto spread = cells.size() >= 3 ? ParseNumber(cells[2]) : std::optional<double>(0.0);
    if (!value || !spread) {
      throw ValidationError(path.string() + ": malformed row " + std::to_string(number));
    }
    rows.push_back({std::string(Trim(cells[0])), {*value, *spread}});
  }
  // Consensus needs a common feature order: natural name order, so F2 < F10.
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return NaturalLess(a.first, b.first); });
  for (const auto& [name, vs] : rows) {
    v.features.push_back(name);
    v.values.push_back(vs.first);
    v.dispersion.push_back(vs.second);
  }
  return v;
}

}  // namespace attrib
