#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles/oracles.h"
#include "support/fn_model.h"

#include "attrib/error.h"
#include "attrib/explain.h"
#include "attrib/metrics.h"
#include "attrib/models/families.h"
#include "attrib/rng.h"

using namespace attrib;
using attrib::testing::FnModel;

namespace {

Dataset Uniform(std::size_t n, std::size_t m, std::uint64_t seed, Task task = Task::kRegression,
                const FnModel::Fn& label = nullptr) {
  Rng rng(seed);
  Dataset d;
  d.task = task;
  d.features = Matrix(n, m);
  for (double& v : d.features.data()) v = rng.Uniform();
  for (std::size_t j = 0; j < m; ++j) d.columns.push_back({"F" + std::to_string(j + 1)});
  d.target.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.target[i] = label ? label(d.features.row(i)) : d.features(i, 0);
  }
  if (task == Task::kClassification) d.class_labels = {"0", "1"};
  return d;
}

double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Interventional value of a coalition: mean over background rows with the
// coalition's features taken from x.
double CoalitionValue(const Model& model, std::span<const double> x, const Matrix& background,
                      std::uint64_t mask) {
  double total = 0;
  std::vector<double> z(x.size());
  for (std::size_t b = 0; b < background.rows(); ++b) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      z[j] = (mask >> j) & 1 ? x[j] : background(b, j);
    }
    total += model.Response(z);
  }
  return total / static_cast<double>(background.rows());
}

}  // namespace

// --- Kernel SHAP ------------------------------------------------------------

TEST_CASE("shap: exact mode equals brute-force Shapley values") {
  const FnModel model(
      [](std::span<const double> x) {
        return x[0] * x[1] + std::sin(3 * x[2]) + x[3] * x[3] * x[4] - 0.5 * x[5];
      },
      6);
  const Matrix background = Uniform(7, 6, 2).features;
  const std::vector<double> x = {0.9, 0.1, 0.7, 0.3, 0.8, 0.45};
  const auto phi = KernelShap(model, x, background, ShapOptions{2048}, 1);
  const auto expected = oracle::BruteForceShapley(
      6, [&](std::uint64_t mask) { return CoalitionValue(model, x, background, mask); });
  REQUIRE(phi.size() == 6);
  for (std::size_t j = 0; j < 6; ++j) CHECK(std::abs(phi.values[j] - expected[j]) <= 1e-9);
}

TEST_CASE("shap: sampled mode keeps efficiency") {
  const FnModel model(
      [](std::span<const double> x) {
        double s = 0;
        for (std::size_t j = 0; j < x.size(); ++j) s += (j + 1) * x[j] * x[(j + 1) % x.size()];
        return s;
      },
      14);
  const Matrix background = Uniform(5, 14, 3).features;
  const std::vector<double> x = Uniform(1, 14, 4).features.data();
  const auto phi = KernelShap(model, x, background, ShapOptions{256}, 9);
  double bg_mean = 0;
  for (double v : model.Response(background)) bg_mean += v / 5.0;
  const double sum = std::accumulate(phi.values.begin(), phi.values.end(), 0.0);
  CHECK(std::abs(sum - (model.Response(x) - bg_mean)) <= 1e-9);
}

TEST_CASE("shap: dummy and symmetry") {
  const FnModel model([](std::span<const double> x) { return x[0] * x[1] + x[3]; }, 4);
  const Matrix background(2, 4, {0.1, 0.1, 0.3, 0.6, 0.5, 0.5, 0.9, 0.2});
  const std::vector<double> x = {0.8, 0.8, 0.4, 0.9};
  const auto phi = KernelShap(model, x, background, ShapOptions{2048}, 1);
  CHECK(std::abs(phi.values[2]) <= 1e-12);
  CHECK(std::abs(phi.values[0] - phi.values[1]) <= 1e-12);

  const Matrix pinned(2, 4, {0.1, 0.1, 0.4, 0.6, 0.5, 0.5, 0.4, 0.2});
  CHECK(KernelShap(model, x, pinned, ShapOptions{2048}, 1).values[2] == 0.0);
}

TEST_CASE("shap: deterministic in the seed") {
  const FnModel model([](std::span<const double> x) { return x[0] * x[5] + x[9]; }, 12);
  const Matrix background = Uniform(6, 12, 5).features;
  const std::vector<double> x = Uniform(1, 12, 6).features.data();
  const auto a = KernelShap(model, x, background, ShapOptions{128}, 4);
  const auto b = KernelShap(model, x, background, ShapOptions{128}, 4);
  CHECK(a.values == b.values);
}

// --- Permutation importance --------------------------------------------------

TEST_CASE("permutation: unused feature scores exactly zero") {
  const Dataset d = Uniform(80, 3, 7);
  const FnModel model([](std::span<const double> x) { return 2 * x[0]; }, 3);
  const auto imp = PermutationImportance(model, d, "r2", 5, 11);
  CHECK(imp.values[1] == 0.0);
  CHECK(imp.values[2] == 0.0);
  CHECK(imp.dispersion[1] == 0.0);
  CHECK(imp.values[0] > 0.5);
}

TEST_CASE("permutation: matches the expectation over all permutations") {
  const Dataset d = Uniform(5, 2, 8);
  const FnModel model([](std::span<const double> x) { return x[0] + 0.1 * x[1]; }, 2);
  const std::vector<double> pred = model.Predict(d.features);
  const double baseline = EvaluateMetric("mse", d.target, pred, {});
  double expected = 0, count = 0;
  oracle::ForEachPermutation(5, [&](const std::vector<std::size_t>& p) {
    Matrix shuffled = d.features;
    for (std::size_t i = 0; i < 5; ++i) shuffled(i, 0) = d.features(p[i], 0);
    expected += EvaluateMetric("mse", d.target, model.Predict(shuffled), {}) - baseline;
    count += 1;
  });
  expected /= count;
  const int repeats = 4000;
  const auto imp = PermutationImportance(model, d, "mse", repeats, 12);
  const double standard_error = imp.dispersion[0] / std::sqrt(static_cast<double>(repeats));
  CHECK(std::abs(imp.values[0] - expected) <= 4 * standard_error);
}

TEST_CASE("permutation: single repeat has zero dispersion") {
  const Dataset d = Uniform(40, 3, 9);
  const FnModel model([](std::span<const double> x) { return x[0] + x[1]; }, 3);
  const auto imp = PermutationImportance(model, d, "r2", 1, 3);
  for (double s : imp.dispersion) CHECK(s == 0.0);
  CHECK_THROWS_AS(PermutationImportance(model, d, "r2", 0, 3), ValidationError);
}

// --- LIME ------------------------------------------------------------------

TEST_CASE("lime: constant model gives zero coefficients") {
  const Dataset d = Uniform(200, 4, 10, Task::kClassification,
                            [](std::span<const double> x) { return x[0] > 0.5 ? 1.0 : 0.0; });
  const FnModel model([](std::span<const double>) { return 0.3; }, 4, Task::kClassification);
  const auto e = LimeExplain(model, d.features.row(0), d, LimeOptions{}, 1);
  for (double c : e.attribution) CHECK(c == 0.0);
  CHECK(e.rules.empty());
}

TEST_CASE("lime: indicator model ranks its feature first with a containing rule") {
  const auto indicator = [](std::span<const double> x) { return x[0] > 0.5 ? 1.0 : 0.0; };
  const Dataset d = Uniform(400, 5, 11, Task::kClassification, indicator);
  const FnModel model(indicator, 5, Task::kClassification);
  const std::vector<double> x = {0.8, 0.3, 0.6, 0.1, 0.9};
  const auto e = LimeExplain(model, x, d, LimeOptions{}, 2);
  REQUIRE_FALSE(e.rules.empty());
  CHECK(e.rules[0].feature == 0);
  CHECK(e.rules[0].direction == RuleDirection::kSupportsClass1);
  for (const auto& rule : e.rules) {
    CAPTURE(FormatRule(rule));
    CHECK(rule.lower < x[rule.feature]);
    CHECK(x[rule.feature] <= rule.upper);
  }
  for (std::size_t i = 1; i < e.rules.size(); ++i) {
    CHECK(std::abs(e.rules[i - 1].weight) >= std::abs(e.rules[i].weight));
  }
  const std::vector<double> below = {0.2, 0.3, 0.6, 0.1, 0.9};
  const auto f = LimeExplain(model, below, d, LimeOptions{}, 2);
  CHECK(f.rules[0].feature == 0);
  CHECK(f.rules[0].direction == RuleDirection::kSupportsClass0);
}

TEST_CASE("lime: rule count and determinism") {
  const Dataset d = Uniform(200, 12, 12);
  const FnModel model([](std::span<const double> x) { return x[0] + x[3] * x[7]; }, 12);
  LimeOptions options;
  options.n_rules = 3;
  const auto a = LimeExplain(model, d.features.row(5), d, options, 7);
  const auto b = LimeExplain(model, d.features.row(5), d, options, 7);
  CHECK(a.rules.size() == 3);
  CHECK(a.attribution == b.attribution);
}

TEST_CASE("lime: quartile edges") {
  const Matrix data(8, 2, {1, 5, 2, 5, 3, 5, 4, 5, 5, 5, 6, 5, 7, 5, 8, 5});
  const auto edges = QuartileEdges(data);
  CHECK(edges[0] == std::vector<double>{2.75, 4.5, 6.25});
  CHECK(edges[1].empty());
}

TEST_CASE("rule formatting") {
  RuleTerm term;
  term.name = "ST_Slope";
  term.lower = -0.5;
  term.upper = 0.5;
  CHECK(FormatRule(term) == "−0.50 < ST_Slope ≤ 0.50");
  CHECK(FormatRule(term, RuleStyle::kAscii) == "-0.50 < ST_Slope <= 0.50");
  term.lower = -std::numeric_limits<double>::infinity();
  term.upper = 1.5;
  term.name = "Sex";
  CHECK(FormatRule(term) == "Sex ≤ 1.50");
  term.lower = 3.5;
  term.upper = std::numeric_limits<double>::infinity();
  term.name = "ChestPainType";
  CHECK(FormatRule(term) == "ChestPainType > 3.50");
}

// --- PDP / ICE / ALE ---------------------------------------------------------

TEST_CASE("pdp: identity model reproduces its grid") {
  const Dataset d = Uniform(100, 2, 13);
  const FnModel model([](std::span<const double> x) { return x[0]; }, 2);
  const auto [pdp, ice] = PdpIce(model, d, 0, 11);
  REQUIRE(pdp.grid.size() == 11);
  for (std::size_t g = 0; g < pdp.grid.size(); ++g) {
    CHECK(std::abs(pdp.response[g] - pdp.grid[g]) <= 1e-12);
  }
  CHECK(std::is_sorted(pdp.grid.begin(), pdp.grid.end()));
}

TEST_CASE("pdp: equals the mean of ICE, additive ICE curves are translates") {
  const Dataset d = Uniform(60, 3, 14);
  const FnModel model([](std::span<const double> x) { return x[0] * x[0] + std::cos(x[1]) + x[2]; },
                      3);
  const auto [pdp, ice] = PdpIce(model, d, 0, 9);
  REQUIRE(ice.ice.rows() == 60);
  for (std::size_t g = 0; g < pdp.grid.size(); ++g) {
    double mean = 0;
    for (std::size_t s = 0; s < ice.ice.rows(); ++s) mean += ice.ice(s, g);
    CHECK(std::abs(pdp.response[g] - mean / 60.0) <= 1e-12);
  }
  for (std::size_t s = 1; s < ice.ice.rows(); ++s) {
    const double offset = ice.ice(s, 0) - ice.ice(0, 0);
    for (std::size_t g = 1; g < pdp.grid.size(); ++g) {
      CHECK(std::abs(ice.ice(s, g) - ice.ice(0, g) - offset) <= 1e-9);
    }
  }
}

TEST_CASE("pdp: constant feature is rejected") {
  Dataset d = Uniform(20, 2, 15);
  for (std::size_t i = 0; i < 20; ++i) d.features(i, 1) = 4.0;
  const FnModel model([](std::span<const double> x) { return x[0]; }, 2);
  CHECK_THROWS_AS(PdpIce(model, d, 1, 10), ValidationError);
}

TEST_CASE("ale: linear slope, unused feature and centering") {
  const Dataset d = Uniform(300, 3, 16);
  const FnModel model([](std::span<const double> x) { return 3 * x[0] + x[1] * x[1]; }, 3);
  const Curve ale = Ale(model, d, 0, 10);
  REQUIRE(ale.grid.size() >= 2);
  for (std::size_t k = 0; k + 1 < ale.grid.size(); ++k) {
    CHECK(std::abs((ale.response[k + 1] - ale.response[k]) - 3 * (ale.grid[k + 1] - ale.grid[k])) <=
          1e-9);
  }
  double centred = 0, total = 0;
  for (std::size_t k = 0; k + 1 < ale.grid.size(); ++k) {
    centred += ale.bin_counts[k] * 0.5 * (ale.response[k] + ale.response[k + 1]);
    total += ale.bin_counts[k];
  }
  CHECK(total == 300);
  CHECK(std::abs(centred) <= 1e-9);

  const Curve flat = Ale(model, d, 2, 10);
  for (double v : flat.response) CHECK(v == 0.0);
  CHECK(AleImportance(flat) == 0.0);
  CHECK(AleImportance(ale) > 0.5);
}

TEST_CASE("ale: empty bins merge") {
  Dataset d = Uniform(40, 1, 17);
  for (std::size_t i = 0; i < 40; ++i) d.features(i, 0) = i < 30 ? 0.0 : 1.0 + 0.01 * i;
  const FnModel model([](std::span<const double> x) { return 2 * x[0]; }, 1);
  const Curve ale = Ale(model, d, 0, 8);
  CHECK(std::adjacent_find(ale.grid.begin(), ale.grid.end(), std::greater_equal<>()) ==
        ale.grid.end());
  for (std::size_t c : ale.bin_counts) CHECK(c > 0);
}

TEST_CASE("curve importances") {
  Curve pdp;
  pdp.grid = {0, 1, 2, 3};
  pdp.response = {1, 3, 1, 3};
  CHECK(PdpImportance(pdp) == doctest::Approx(1.0).epsilon(1e-12));
  Curve ale;
  ale.grid = {0, 1, 2};
  ale.response = {-1, 1, 1};
  ale.bin_counts = {1, 3};
  // Midpoints 0 and 1 with weights 1 and 3: mean 0.75, variance 0.1875.
  CHECK(AleImportance(ale) == doctest::Approx(std::sqrt(0.1875)).epsilon(1e-12));
}

// --- Integrated gradients ------------------------------------------------------

TEST_CASE("ig: linear model is exact and x = baseline gives zero") {
  const std::vector<double> w = {1.5, -2.0, 0.25};
  const FnModel model(
      [&](std::span<const double> x) { return w[0] * x[0] + w[1] * x[1] + w[2] * x[2]; }, 3,
      Task::kRegression, [&](std::span<const double>) { return w; });
  const std::vector<double> x = {1, 2, 3}, b = {0.5, 0.5, 0.5};
  const auto r = IntegratedGradients(model, x, b, 8);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(r.attribution.values[i] - w[i] * (x[i] - b[i])) <= 1e-12);
  CHECK(r.completeness_gap <= 1e-12);
  const auto same = IntegratedGradients(model, b, b, 8);
  for (double v : same.attribution.values) CHECK(v == 0.0);
}

TEST_CASE("ig: completeness gap shrinks with steps on a smooth model") {
  const auto f = [](std::span<const double> x) { return Sigmoid(3 * x[0] * x[1] - 2 * x[2]); };
  const auto grad = [&](std::span<const double> x) {
    const double p = f(x), s = p * (1 - p);
    return std::vector<double>{3 * x[1] * s, 3 * x[0] * s, -2 * s};
  };
  const FnModel model(f, 3, Task::kClassification, grad);
  const std::vector<double> x = {0.9, 0.8, -0.4}, b = {0, 0, 0};
  double previous = IntegratedGradients(model, x, b, 2).completeness_gap;
  for (int steps = 4; steps <= 512; steps *= 2) {
    const double gap = IntegratedGradients(model, x, b, steps).completeness_gap;
    CAPTURE(steps);
    CHECK(gap <= 1.1 * previous);
    previous = gap;
  }
  CHECK(previous < 1e-5);
  CHECK_THROWS_AS(IntegratedGradients(model, x, b, 1), ValidationError);
}

TEST_CASE("ig: trained MLP against a fine reference") {
  Dataset d = Uniform(200, 3, 18, Task::kClassification,
                      [](std::span<const double> x) { return x[0] + x[1] > 1.0 ? 1.0 : 0.0; });
  const auto model = Fit(ModelConfig{Family::kMlp, {}, 3}, d);
  const std::vector<double> b = {0.5, 0.5, 0.5};
  for (std::size_t s = 0; s < 5; ++s) {
    const auto coarse = IntegratedGradients(*model, d.features.row(s), b, 256);
    const auto fine = IntegratedGradients(*model, d.features.row(s), b, 16384);
    CHECK(coarse.completeness_gap < 1e-3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::abs(coarse.attribution.values[i] - fine.attribution.values[i]) < 1e-3);
    }
  }
}

TEST_CASE("ig: non-differentiable model is rejected") {
  const FnModel model([](std::span<const double> x) { return x[0]; }, 1);
  const std::vector<double> x = {1.0}, b = {0.0};
  CHECK_THROWS_AS(IntegratedGradients(model, x, b, 16), ValidationError);
}

// --- Counterfactuals ------------------------------------------------------------

TEST_CASE("counterfactual: indicator model changes only its feature") {
  const FnModel model([](std::span<const double> x) { return x[0] > 0.5 ? 1.0 : 0.0; }, 3,
                      Task::kClassification);
  const Matrix reference = Uniform(100, 3, 19).features;
  const std::vector<double> x = {0.2, 0.4, 0.6};
  const auto r = Counterfactual(model, x, 1, reference, CounterfactualOptions{}, 5);
  REQUIRE(r.counterfactuals.rows() >= 1);
  CHECK_FALSE(r.exhausted);
  double previous = 0;
  for (std::size_t i = 0; i < r.counterfactuals.rows(); ++i) {
    const auto c = r.counterfactuals.row(i);
    CHECK(model.Predict(Matrix(1, 3, {c[0], c[1], c[2]}))[0] == 1.0);
    CHECK(c[1] == x[1]);
    CHECK(c[2] == x[2]);
    const double l1 = std::abs(c[0] - x[0]);
    CHECK(l1 >= previous);
    previous = l1;
  }
  CHECK(r.change_frequency.values[0] == 1.0);
  CHECK(r.change_frequency.values[1] == 0.0);
  CHECK(r.change_frequency.values[2] == 0.0);
}

TEST_CASE("counterfactual: sample already in the target class") {
  const FnModel model([](std::span<const double> x) { return x[0] > 0.5 ? 1.0 : 0.0; }, 2,
                      Task::kClassification);
  const std::vector<double> x = {0.9, 0.1};
  const auto r = Counterfactual(model, x, 1, Uniform(10, 2, 20).features, {}, 1);
  REQUIRE(r.counterfactuals.rows() == 1);
  CHECK(r.counterfactuals.row(0)[0] == 0.9);
  for (double v : r.change_frequency.values) CHECK(v == 0.0);
}

TEST_CASE("counterfactual: disjunctive model is reached through either feature") {
  const FnModel model(
      [](std::span<const double> x) { return x[0] > 0.7 || x[1] > 0.7 ? 1.0 : 0.0; }, 3,
      Task::kClassification);
  const std::vector<double> x = {0.1, 0.1, 0.5};
  CounterfactualOptions options;
  options.n_counterfactuals = 8;
  const auto r = Counterfactual(model, x, 1, Uniform(200, 3, 21).features, options, 6);
  CHECK(r.change_frequency.values[0] > 0.0);
  CHECK(r.change_frequency.values[1] > 0.0);
  CHECK(r.change_frequency.values[2] == 0.0);
}

TEST_CASE("counterfactual: unreachable target exhausts the budget") {
  const FnModel model([](std::span<const double>) { return 0.0; }, 2, Task::kClassification);
  const std::vector<double> x = {0.5, 0.5};
  CounterfactualOptions options;
  options.budget = 50;
  const auto r = Counterfactual(model, x, 1, Uniform(20, 2, 22).features, options, 2);
  CHECK(r.exhausted);
  CHECK(r.counterfactuals.rows() == 0);
}

// --- Aggregation ------------------------------------------------------------------

TEST_CASE("aggregate local attributions") {
  AttributionMatrix m;
  m.method = "shap";
  m.model = "rf";
  m.features = {"a", "b"};
  m.sample_ids = {0, 1};
  m.values = Matrix(2, 2, {1, -3, -1, 1});
  const auto g = AggregateLocal(m);
  CHECK(g.values == std::vector<double>{1, 2});
  CHECK(g.dispersion == std::vector<double>{0, 1});
  CHECK(g.method == "shap");
  CHECK(g.features == m.features);
}
