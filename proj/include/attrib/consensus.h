#pragma once

#include <map>
#include <string>
#include <vector>

#include "attrib/explain.h"

namespace attrib {

enum class ConsensusKind { kAttributionByMethod, kRankByMethod, kRankByModel };

std::string_view ConsensusKindName(ConsensusKind kind);
ConsensusKind ParseConsensusKind(std::string_view name);

inline constexpr double kDefaultCutoff = 0.75;

// Model id -> quality score (AUC for classification, R² for regression).
using ModelScores = std::map<std::string, double>;

struct FilterResult {
  std::vector<std::string> kept;
  // (model id, reason)
  std::vector<std::pair<std::string, std::string>> dropped;
};

// Keeps models with score >= cutoff. Missing or NaN scores are dropped.
FilterResult FilterModels(const ModelScores& scores, double cutoff);

struct Normalized {
  std::vector<double> values;
  bool all_zero = false;  // returned unchanged (zeros) when set
};

// |v| / sum(|v|).
Normalized NormalizeAttribution(std::span<const double> values);

// Rank of each feature by descending |value|; 1 is best, ties go to the
// lower feature index.
std::vector<double> RankFeatures(std::span<const double> values);

struct RankedFeature {
  std::string feature;
  std::size_t index = 0;
  double score = 0.0;
  double dispersion = 0.0;
};

struct ConsensusReport {
  ConsensusKind kind = ConsensusKind::kAttributionByMethod;
  std::string subject;  // method id, or model id for rank_by_model
  double cutoff = kDefaultCutoff;
  bool filtered = true;  // false for rank_by_model
  std::vector<std::string> included;
  std::vector<std::pair<std::string, std::string>> excluded;
  std::vector<RankedFeature> ranking;

  // Zero-based position of a feature in the ranking; ranking.size() if absent.
  std::size_t Position(std::string_view feature) const;
};

// Contributor id -> attribution vector. Vectors must share the feature list.
using Contributions = std::map<std::string, AttributionVector>;

// Mean of unit-L1 |attribution| over models passing the cutoff, sorted by
// descending score. Throws ValidationError when no model survives.
ConsensusReport ConsensusAttributionByMethod(const std::string& method,
                                             const Contributions& by_model,
                                             const ModelScores& scores, double cutoff);

// Mean rank over models passing the cutoff, sorted by ascending mean rank.
ConsensusReport ConsensusRankByMethod(const std::string& method,
                                      const Contributions& by_model,
                                      const ModelScores& scores, double cutoff);

// Mean rank over the methods applied to one model; no cutoff.
ConsensusReport ConsensusRankByModel(const std::string& model,
                                     const Contributions& by_method);

}  // namespace attrib
