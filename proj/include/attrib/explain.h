#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attrib/data.h"
#include "attrib/matrix.h"
#include "attrib/model.h"

namespace attrib {

// Per-feature scores from one (model, method) pair. Positive values push
// towards class 1 or a larger regression output.
struct AttributionVector {
  std::string method;
  std::string model;
  std::vector<std::string> features;
  std::vector<double> values;
  // Non-negative spread across repeats or samples; zeros for single shots.
  std::vector<double> dispersion;

  std::size_t size() const { return values.size(); }
};

// One row of attributions per explained sample.
struct AttributionMatrix {
  std::string method;
  std::string model;
  std::vector<std::string> features;
  std::vector<std::size_t> sample_ids;
  Matrix values;  // samples x features
};

enum class RuleDirection { kSupportsClass1, kSupportsClass0 };

// Interval rule lower < feature <= upper (open ends are infinite).
struct RuleTerm {
  std::size_t feature = 0;
  std::string name;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  RuleDirection direction = RuleDirection::kSupportsClass1;
  double weight = 0.0;
};

enum class RuleStyle { kUnicode, kAscii };

// "-0.50 < ST_Slope ≤ 0.50", "ChestPainType > 3.50", "Sex ≤ 1.50". Bounds
// use two decimals; the Unicode style writes U+2212 for minus and U+2264
// for less-or-equal.
std::string FormatRule(const RuleTerm& rule, RuleStyle style = RuleStyle::kUnicode);

struct LocalExplanation {
  std::size_t sample_id = 0;
  std::vector<double> attribution;
  std::vector<RuleTerm> rules;           // strongest first
  std::vector<double> probabilities;     // predicted class probabilities
  std::vector<double> feature_values;    // the explained sample
};

// PDP / ICE / ALE curve over one feature.
struct Curve {
  std::size_t feature = 0;
  std::string name;
  std::vector<double> grid;      // strictly increasing
  std::vector<double> response;  // PDP or ALE value per grid point
  // ICE only: one row per sample, one column per grid point.
  Matrix ice;
  std::vector<std::size_t> sample_ids;
  // ALE only: samples per bin (grid.size() - 1 entries).
  std::vector<std::size_t> bin_counts;
};

// --- Global methods -------------------------------------------------------

// importance_j = baseline - mean permuted score for higher-is-better metrics
// (permuted - baseline otherwise), so larger always means more important.
// Dispersion is the population standard deviation over repeats.
AttributionVector PermutationImportance(const Model& model, const Dataset& data,
                                        std::string_view metric, int n_repeats,
                                        std::uint64_t seed);

// --- Local methods --------------------------------------------------------

struct ShapOptions {
  std::size_t budget = 2048;  // coalition evaluations
};

// Kernel SHAP against a background sample. When 2^n_features <= budget every
// coalition is enumerated and the weighted least-squares solution equals the
// exact Shapley values; otherwise coalitions are sampled in complementary
// pairs. The sum of values equals f(x) - mean f(background) in both modes.
AttributionVector KernelShap(const Model& model, std::span<const double> x,
                             const Matrix& background, const ShapOptions& options,
                             std::uint64_t seed);

struct LimeOptions {
  int n_perturbations = 1000;
  int n_rules = 10;
  double ridge = 1.0;
  // Kernel width; <= 0 selects 0.75 * sqrt(n_features).
  double kernel_width = 0.0;
};

// Quartile bins of `data` (deduplicated edges; constant columns get no bins
// and attribution 0). Exposed for tests and rule rendering.
std::vector<std::vector<double>> QuartileEdges(const Matrix& data);

// Tabular LIME: perturbations redraw each feature's quartile bin from its
// training frequency; a weighted ridge model on "same bin as x" indicators
// gives one coefficient per feature.
LocalExplanation LimeExplain(const Model& model, std::span<const double> x,
                             const Dataset& data, const LimeOptions& options,
                             std::uint64_t seed, std::size_t sample_id = 0);

// Same, reusing precomputed quartile edges of `data`.
LocalExplanation LimeExplain(const Model& model, std::span<const double> x,
                             const Dataset& data,
                             const std::vector<std::vector<double>>& edges,
                             const LimeOptions& options, std::uint64_t seed,
                             std::size_t sample_id = 0);

struct IntegratedGradientsResult {
  AttributionVector attribution;
  // |sum(attribution) - (f(x) - f(baseline))|
  double completeness_gap = 0.0;
};

// Midpoint-rule path integral from `baseline` to `x` with `n_steps` points.
IntegratedGradientsResult IntegratedGradients(const Model& model,
                                              std::span<const double> x,
                                              std::span<const double> baseline,
                                              int n_steps);

struct CounterfactualOptions {
  int n_counterfactuals = 4;
  int budget = 2000;  // model evaluations
};

struct CounterfactualResult {
  Matrix counterfactuals;  // rows sorted by L1 distance to x
  AttributionVector change_frequency;
  bool exhausted = false;  // budget spent without finding any counterfactual
};

// Random-restart search inside the per-feature ranges of `reference`. Each
// restart perturbs a random feature subset, then greedily pulls every
// changed feature back towards x while the target class holds. Points
// within 1e-4 (L-infinity, relative to the feature range) of an earlier
// find are treated as duplicates.
CounterfactualResult Counterfactual(const Model& model, std::span<const double> x,
                                    std::size_t target_class, const Matrix& reference,
                                    const CounterfactualOptions& options,
                                    std::uint64_t seed);

// --- Curves ---------------------------------------------------------------

// Quantile of sorted data with linear interpolation between order statistics.
double Quantile(std::span<const double> sorted, double q);

// Grid = distinct quantiles at levels k / (grid_size - 1). ICE row s sweeps
// the feature of sample s over the grid; PDP is the column mean of ICE.
std::pair<Curve, Curve> PdpIce(const Model& model, const Dataset& data,
                               std::size_t feature, int grid_size);

// Accumulated local effects on quantile bins (first bin closed on the left).
// Empty bins merge into their left neighbour. The response at edge k is the
// accumulated effect minus the occupancy-weighted mean of bin midpoints
// (A_{k-1} + A_k) / 2.
Curve Ale(const Model& model, const Dataset& data, std::size_t feature, int n_bins);

// --- Aggregation ----------------------------------------------------------

// Mean and population standard deviation of |attribution| per feature.
AttributionVector AggregateLocal(const AttributionMatrix& matrix);

// Scalar importance from curves: population standard deviation of the PDP
// over its grid, and occupancy-weighted standard deviation of the ALE bin
// midpoints.
double PdpImportance(const Curve& pdp);
double AleImportance(const Curve& ale);

}  // namespace attrib
