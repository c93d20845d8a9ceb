#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "attrib/consensus.h"
#include "attrib/explain.h"
#include "attrib/metrics.h"

namespace attrib {

// --- Plots ----------------------------------------------------------------

enum class PlotKind { kBar, kCurve, kCurveFamily, kScatter, kRulePanel };

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// bar:          categories + series[0].y (top to bottom), optional errors.
// curve:        one or more (x, y) lines.
// curve_family: series[0] is drawn bold over the remaining thin lines.
// scatter:      series[0] points with the y = x diagonal.
// rule_panel:   categories are rule texts, series[0].y signed weights,
//               annotations the sample's actual values.
struct PlotSpec {
  PlotKind kind = PlotKind::kBar;
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> categories;
  std::vector<Series> series;
  std::vector<double> errors;
  std::vector<std::string> annotations;

  // Throws ValidationError on inconsistent data.
  void Validate() const;
};

std::string RenderSvg(const PlotSpec& spec);
void RenderSvg(const PlotSpec& spec, const std::filesystem::path& path);

// Top-k bars of a global attribution ordered by descending value, with
// dispersion whiskers.
PlotSpec AttributionBarPlot(const AttributionVector& global, std::size_t top_k,
                            const std::string& title);
PlotSpec ConsensusBarPlot(const ConsensusReport& report, std::size_t top_k);
PlotSpec RulePanelPlot(const LocalExplanation& explanation, const std::string& title);

// --- Tables ---------------------------------------------------------------

// Writes text to a file, creating parent directories. Throws Error naming
// the path on failure.
void WriteTextFile(const std::filesystem::path& path, const std::string& text);

std::string AttributionCsv(const AttributionMatrix& matrix);         // sample_id,feature,attribution
std::string GlobalCsv(const AttributionVector& global);              // feature,mean_abs_attribution,std
std::string CurveCsv(const Curve& curve, bool ice);                  // grid_value,response[,sample_id]
std::string MetricsCsv(const MetricsReport& report);                 // metric,value
std::string ConsensusCsv(const ConsensusReport& report);             // rank,feature,score,dispersion
std::string ConsensusSidecar(const ConsensusReport& report);         // JSON
std::string RulesCsv(const std::vector<LocalExplanation>& explanations);
std::string FailedCsv(const std::string& reason);

// Reads a global attribution CSV back (feature,mean_abs_attribution,std).
// Rows are returned in natural feature-name order (F2 before F10).
AttributionVector ReadGlobalCsv(const std::filesystem::path& path);

}  // namespace attrib
