#include <cmath>

#include <fmt/format.h>

#include "attrib/error.h"
#include "attrib/explain.h"

namespace attrib {
namespace {

std::string Bound(double value, RuleStyle style) {
  std::string text = fmt::format("{:.2f}", value);
  if (style == RuleStyle::kUnicode && !text.empty() && text.front() == '-') {
    text.replace(0, 1, "−");
  }
  return text;
}

}  // namespace

std::string FormatRule(const RuleTerm& rule, RuleStyle style) {
  const char* le = style == RuleStyle::kUnicode ? " ≤ " : " <= ";
  const bool has_lower = std::isfinite(rule.lower);
  const bool has_upper = std::isfinite(rule.upper);
  if (has_lower && has_upper) {
    return Bound(rule.lower, style) + " < " + rule.name + le + Bound(rule.upper, style);
  }
  if (has_upper) return rule.name + le + Bound(rule.upper, style);
  if (has_lower) return rule.name + " > " + Bound(rule.lower, style);
  return rule.name;
}

AttributionVector AggregateLocal(const AttributionMatrix& matrix) {
  const std::size_t n = matrix.values.rows(), m = matrix.values.cols();
  if (n == 0) throw ValidationError("cannot aggregate an empty attribution matrix");
  AttributionVector out;
  out.method = matrix.method;
  out.model = matrix.model;
  out.features = matrix.features;
  out.values.assign(m, 0.0);
  out.dispersion.assign(m, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < m; ++c) out.values[c] += std::abs(matrix.values(r, c));
  }
  for (double& v : out.values) v /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      const double d = std::abs(matrix.values(r, c)) - out.values[c];
      out.dispersion[c] += d * d;
    }
  }
  for (double& v : out.dispersion) v = std::sqrt(v / static_cast<double>(n));
  return out;
}

double PdpImportance(const Curve& pdp) {
  const auto& y = pdp.response;
  if (y.empty()) return 0.0;
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(y.size()));
}

double AleImportance(const Curve& ale) {
  double total = 0.0, mean = 0.0;
  for (std::size_t k = 0; k < ale.bin_counts.size(); ++k) {
    const double mid = 0.5 * (ale.response[k] + ale.response[k + 1]);
    mean += static_cast<double>(ale.bin_counts[k]) * mid;
    total += static_cast<double>(ale.bin_counts[k]);
  }
  if (total == 0.0) return 0.0;
  mean /= total;
  double var = 0.0;
  for (std::size_t k = 0; k < ale.bin_counts.size(); ++k) {
    const double mid = 0.5 * (ale.response[k] + ale.response[k + 1]) - mean;
    var += static_cast<double>(ale.bin_counts[k]) * mid * mid;
  }
  return std::sqrt(var / total);
}

}  // namespace attrib
