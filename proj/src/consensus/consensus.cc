#include "attrib/consensus.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "attrib/error.h"
#include "attrib/text.h"

namespace attrib {
namespace {

// Validates shared feature lists and returns them.
const std::vector<std::string>& CheckShape(const Contributions& contributions,
                                           const std::vector<std::string>& ids) {
  const auto& first = contributions.at(ids.front());
  for (const auto& id : ids) {
    const auto& v = contributions.at(id);
    if (v.values.size() != first.values.size() || v.features != first.features) {
      throw ValidationError("attribution vectors for '" + ids.front() + "' and '" + id +
                            "' cover different features");
    }
    if (v.features.size() != v.values.size()) {
      throw ValidationError("attribution vector for '" + id +
                            "' has mismatched names and values");
    }
  }
  return first.features;
}

// score_j = mean of per-contributor values, dispersion = population std.
std::vector<RankedFeature> Summarize(const std::vector<std::string>& features,
                                     const std::vector<std::vector<double>>& rows) {
  const std::size_t m = features.size();
  const double n = static_cast<double>(rows.size());
  std::vector<RankedFeature> out(m);
  for (std::size_t j = 0; j < m; ++j) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r[j];
    mean /= n;
    double var = 0.0;
    for (const auto& r : rows) var += (r[j] - mean) * (r[j] - mean);
    out[j] = {features[j], j, mean, std::sqrt(var / n)};
  }
  return out;
}

std::pair<Contributions, FilterResult> Filtered(const Contributions& by_model,
                                                const ModelScores& scores, double cutoff,
                                                const std::string& method) {
  if (!(cutoff >= 0.0 && cutoff <= 1.0)) {
    throw ValidationError("cutoff must lie in [0, 1], got " + FormatNumber(cutoff));
  }
  if (by_model.empty()) throw ValidationError("no contributions for method '" + method + "'");
  ModelScores relevant;
  FilterResult result;
  for (const auto& [id, v] : by_model) {
    const auto it = scores.find(id);
    if (it == scores.end()) {
      result.dropped.emplace_back(id, "no score");
    } else {
      relevant.emplace(id, it->second);
    }
  }
  FilterResult scored = FilterModels(relevant, cutoff);
  result.kept = scored.kept;
  result.dropped.insert(result.dropped.end(), scored.dropped.begin(), scored.dropped.end());
  std::sort(result.dropped.begin(), result.dropped.end());
  if (result.kept.empty()) {
    throw ValidationError("no model for method '" + method + "' reaches the cutoff " +
                          FormatNumber(cutoff));
  }
  Contributions kept;
  for (const auto& id : result.kept) kept.emplace(id, by_model.at(id));
  return {std::move(kept), std::move(result)};
}

ConsensusReport MeanRank(ConsensusKind kind, const std::string& subject,
                         const Contributions& contributions) {
  std::vector<std::string> ids;
  for (const auto& [id, v] : contributions) ids.push_back(id);
  const auto& features = CheckShape(contributions, ids);
  std::vector<std::vector<double>> ranks;
  for (const auto& id : ids) ranks.push_back(RankFeatures(contributions.at(id).values));
  ConsensusReport report;
  report.kind = kind;
  report.subject = subject;
  report.included = ids;
  report.ranking = Summarize(features, ranks);
  std::stable_sort(report.ranking.begin(), report.ranking.end(),
                   [](const RankedFeature& a, const RankedFeature& b) {
                     return a.score < b.score;
                   });
  return report;
}

}  // namespace

std::string_view ConsensusKindName(ConsensusKind kind) {
  switch (kind) {
    case ConsensusKind::kAttributionByMethod: return "attribution_by_method";
    case ConsensusKind::kRankByMethod: return "rank_by_method";
    case ConsensusKind::kRankByModel: return "rank_by_model";
  }
  return "unknown";
}

ConsensusKind ParseConsensusKind(std::string_view name) {
  const std::string lower = ToLower(name);
  for (auto kind : {ConsensusKind::kAttributionByMethod, ConsensusKind::kRankByMethod,
                    ConsensusKind::kRankByModel}) {
    if (lower == ConsensusKindName(kind)) return kind;
  }
  throw ValidationError("unknown consensus kind '" + std::string(name) + "'");
}

FilterResult FilterModels(const ModelScores& scores, double cutoff) {
  FilterResult result;
  for (const auto& [id, score] : scores) {
    if (std::isnan(score)) {
      result.dropped.emplace_back(id, "score undefined");
    } else if (score >= cutoff) {
      result.kept.push_back(id);
    } else {
      result.dropped.emplace_back(id, "score " + FormatNumber(score) + " below cutoff " +
                                          FormatNumber(cutoff));
    }
  }
  return result;
}

Normalized NormalizeAttribution(std::span<const double> values) {
  Normalized out;
  out.values.resize(values.size());
  double total = 0.0;
  for (double v : values) total += std::abs(v);
  if (!std::isfinite(total)) throw ValidationError("attribution contains non-finite values");
  if (total == 0.0) {
    out.values.assign(values.begin(), values.end());
    out.all_zero = true;
    return out;
  }
  for (std::size_t j = 0; j < values.size(); ++j) out.values[j] = std::abs(values[j]) / total;
  return out;
}

std::vector<double> RankFeatures(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(values[a]) > std::abs(values[b]);
  });
  std::vector<double> rank(values.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<double>(r + 1);
  return rank;
}

std::size_t ConsensusReport::Position(std::string_view feature) const {
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (ranking[i].feature == feature) return i;
  }
  return ranking.size();
}

ConsensusReport ConsensusAttributionByMethod(const std::string& method,
                                             const Contributions& by_model,
                                             const ModelScores& scores, double cutoff) {
  auto [kept, filter] = Filtered(by_model, scores, cutoff, method);
  const auto& features = CheckShape(kept, filter.kept);
  std::vector<std::vector<double>> rows;
  for (const auto& id : filter.kept) {
    rows.push_back(NormalizeAttribution(kept.at(id).values).values);
  }
  ConsensusReport report;
  report.kind = ConsensusKind::kAttributionByMethod;
  report.subject = method;
  report.cutoff = cutoff;
  report.included = filter.kept;
  report.excluded = filter.dropped;
  report.ranking = Summarize(features, rows);
  std::stable_sort(report.ranking.begin(), report.ranking.end(),
                   [](const RankedFeature& a, const RankedFeature& b) {
                     return a.score > b.score;
                   });
  return report;
}

ConsensusReport ConsensusRankByMethod(const std::string& method,
                                      const Contributions& by_model,
                                      const ModelScores& scores, double cutoff) {
  auto [kept, filter] = Filtered(by_model, scores, cutoff, method);
  ConsensusReport report = MeanRank(ConsensusKind::kRankByMethod, method, kept);
  report.cutoff = cutoff;
  report.excluded = filter.dropped;
  return report;
}

ConsensusReport ConsensusRankByModel(const std::string& model,
                                     const Contributions& by_method) {
  if (by_method.empty()) {
    throw ValidationError("no method contributions for model '" + model + "'");
  }
  ConsensusReport report = MeanRank(ConsensusKind::kRankByModel, model, by_method);
  report.filtered = false;
  return report;
}

}  // namespace attrib
