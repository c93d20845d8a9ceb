#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "oracles/oracles.h"

#include "attrib/error.h"
#include "attrib/model.h"
#include "attrib/models/families.h"
#include "attrib/rng.h"

using namespace attrib;

namespace {

Dataset MakeDataset(const Matrix& x, const std::vector<double>& y, Task task) {
  Dataset d;
  d.features = x;
  d.target = y;
  d.task = task;
  for (std::size_t j = 0; j < x.cols(); ++j) d.columns.push_back({"F" + std::to_string(j + 1)});
  if (task == Task::kClassification) d.class_labels = {"0", "1"};
  return d;
}

// Two-class data where class 1 iff F1 >= 0.5, three noise features.
Dataset Separable(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(n, 4);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 4; ++j) x(i, j) = rng.Uniform();
    y[i] = x(i, 0) >= 0.5 ? 1.0 : 0.0;
  }
  return MakeDataset(x, y, Task::kClassification);
}

Dataset Smooth(std::size_t n, std::uint64_t seed, Task task) {
  Rng rng(seed);
  Matrix x(n, 3);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 3; ++j) x(i, j) = rng.Uniform(-1, 1);
    const double f = 2 * x(i, 0) - x(i, 1) + 0.3 * rng.Normal();
    y[i] = task == Task::kRegression ? f : (f > 0 ? 1.0 : 0.0);
  }
  return MakeDataset(x, y, task);
}

Dataset SixPredicateData() {
  return GenerateSynthetic(ParseRuleSpec("n_features = 100\n"
                                         "F4, 0.1, 0.5\nF10, 0.6, inf\nF20, -inf, 0.8\n"
                                         "F31, -inf, 0.25\nF57, 0.4, 0.7\nF85, 0.4, inf\n"),
                           2000, 7);
}

ModelConfig Config(Family f, Hyperparameters p = {}, std::uint64_t seed = 1) {
  return ModelConfig{f, std::move(p), seed};
}

Matrix Probe(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = 0, double hi = 1) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.Uniform(lo, hi);
  return m;
}

}  // namespace

TEST_CASE("dt: depth-1 split on the single informative feature") {
  const Dataset d = Separable(200, 3);
  const auto model = Fit(Config(Family::kDecisionTree, {{"max_depth", 1}}), d);
  const auto& tree = dynamic_cast<const DecisionTreeModel&>(*model).tree();
  const auto& root = tree.nodes()[0];
  CHECK(root.feature == 0);
  double below = -1, above = 2;
  for (std::size_t i = 0; i < d.n_samples(); ++i) {
    const double v = d.features(i, 0);
    if (v < 0.5) below = std::max(below, v);
    else above = std::min(above, v);
  }
  CHECK(root.threshold > below);
  CHECK(root.threshold <= above);
  CHECK(model->Predict(Matrix(1, 4, {0.9, 0.1, 0.1, 0.1}))[0] == 1.0);
}

TEST_CASE("all families: empty input, probability rows and determinism") {
  const Dataset d = Smooth(150, 4, Task::kClassification);
  const Matrix probe = Probe(60, 3, 9, -1.5, 1.5);
  for (Family f : kAllFamilies) {
    CAPTURE(FamilyId(f));
    const auto a = Fit(Config(f), d);
    const auto b = Fit(Config(f), d);
    CHECK(a->Predict(Matrix(0, 3)).empty());
    CHECK(a->Predict(probe) == b->Predict(probe));
    CHECK(a->PredictProba(probe) == b->PredictProba(probe));
    const Matrix p = a->PredictProba(probe);
    for (std::size_t r = 0; r < p.rows(); ++r) {
      CHECK(std::abs(p(r, 0) + p(r, 1) - 1.0) <= 1e-9);
      CHECK(p(r, 0) >= 0.0);
      CHECK(p(r, 1) <= 1.0);
    }
    CHECK_THROWS_AS(a->Predict(Matrix(1, 2)), ValidationError);
  }
}

TEST_CASE("all families: regression fits a smooth signal") {
  const Dataset train = Smooth(300, 5, Task::kRegression);
  const Dataset test = Smooth(200, 6, Task::kRegression);
  for (Family f : kAllFamilies) {
    CAPTURE(FamilyId(f));
    const auto model = Fit(Config(f), train);
    CHECK(ScoreModel(*model, test, "r2") > 0.5);
    CHECK_THROWS_AS(model->PredictProba(test.features), ValidationError);
  }
}

TEST_CASE("rf: unanimous vote gives a (0, 1) row") {
  const Dataset d = Separable(200, 8);
  const auto model = Fit(Config(Family::kRandomForest, {{"n_trees", 15}}), d);
  const Matrix p = model->PredictProba(Matrix(1, 4, {0.99, 0.5, 0.5, 0.5}));
  CHECK(p(0, 0) == 0.0);
  CHECK(p(0, 1) == 1.0);
}

TEST_CASE("rf: one tree without bootstrap equals a decision tree") {
  const Dataset d = Smooth(200, 10, Task::kClassification);
  const auto rf = Fit(Config(Family::kRandomForest,
                             {{"n_trees", 1}, {"bootstrap", 0}, {"max_features", 3}, {"max_depth", 6}}),
                      d);
  const auto dt = Fit(Config(Family::kDecisionTree, {{"max_depth", 6}}), d);
  const Matrix probe = Probe(300, 3, 2, -1, 1);
  CHECK(rf->PredictProba(probe) == dt->PredictProba(probe));
}

TEST_CASE("logreg: zero weights give uniform probabilities and zero gradient") {
  LogisticModel zero(Config(Family::kLogReg), Task::kClassification, 3, 2,
                     Standardizer::Identity(3), {{0.0, 0.0, 0.0}}, {0.0});
  const Matrix p = zero.PredictProba(Probe(5, 3, 1));
  for (std::size_t r = 0; r < 5; ++r) CHECK(p(r, 1) == 0.5);
  CHECK(zero.Gradient(std::vector<double>{0.3, 0.1, 0.9}) == std::vector<double>{0, 0, 0});
}

TEST_CASE("logreg: gradient is p(1-p) w in raw units") {
  const Dataset d = Smooth(200, 12, Task::kClassification);
  const auto model = Fit(Config(Family::kLogReg), d);
  const auto& lr = dynamic_cast<const LogisticModel&>(*model);
  const auto w = lr.RawWeights();
  const std::vector<double> x = {0.2, -0.4, 0.7};
  const double p = model->Response(x);
  const auto g = model->Gradient(x);
  for (std::size_t i = 0; i < 3; ++i) CHECK(g[i] == doctest::Approx(p * (1 - p) * w[i]).epsilon(1e-12));
}

TEST_CASE("logreg and mlp: gradient matches central differences on 100 probes") {
  for (Task task : {Task::kClassification, Task::kRegression}) {
    const Dataset d = Smooth(200, 13, task);
    for (Family f : {Family::kLogReg, Family::kMlp}) {
      CAPTURE(FamilyId(f));
      const auto model = Fit(Config(f), d);
      const Matrix probe = Probe(100, 3, 14, -1, 1);
      double worst = 0.0;
      for (std::size_t r = 0; r < probe.rows(); ++r) {
        const auto g = model->Gradient(probe.row(r));
        const auto fd = oracle::FiniteDifference(
            [&](std::span<const double> x) { return model->Response(x); }, probe.row(r), 1e-5);
        for (std::size_t i = 0; i < 3; ++i) worst = std::max(worst, std::abs(g[i] - fd[i]));
      }
      CHECK(worst < 1e-4);
    }
  }
}

TEST_CASE("non-differentiable families reject gradients") {
  const Dataset d = Separable(50, 1);
  for (Family f : {Family::kDecisionTree, Family::kRandomForest, Family::kGradientBoosting,
                   Family::kKnn}) {
    const auto model = Fit(Config(f, f == Family::kKnn ? Hyperparameters{{"k", 3}} : Hyperparameters{}), d);
    CHECK_FALSE(model->differentiable());
    CHECK_THROWS_AS(model->Gradient(std::vector<double>(4, 0.5)), ValidationError);
  }
}

TEST_CASE("knn: k=1 reproduces training labels, k=3 vote fractions") {
  const Dataset d = Smooth(120, 15, Task::kClassification);
  const auto one = Fit(Config(Family::kKnn, {{"k", 1}}), d);
  CHECK(one->Predict(d.features) == d.target);

  const Dataset tiny = MakeDataset(Matrix(4, 1, {0.0, 1.0, 2.0, 10.0}), {1, 1, 0, 0},
                                   Task::kClassification);
  const auto three = Fit(Config(Family::kKnn, {{"k", 3}}), tiny);
  const Matrix p = three->PredictProba(Matrix(1, 1, {1.0}));
  CHECK(p(0, 0) == doctest::Approx(1.0 / 3));
  CHECK(p(0, 1) == doctest::Approx(2.0 / 3));
}

TEST_CASE("gbt: learning rate 0 predicts the base score") {
  const Dataset d = Smooth(100, 16, Task::kClassification);
  const auto model = Fit(Config(Family::kGradientBoosting, {{"learning_rate", 0}}), d);
  double prior = 0;
  for (double y : d.target) prior += y;
  prior /= static_cast<double>(d.n_samples());
  for (double p : model->Response(Probe(20, 3, 3, -1, 1))) CHECK(p == doctest::Approx(prior).epsilon(1e-12));

  const Dataset r = Smooth(100, 17, Task::kRegression);
  const auto reg = Fit(Config(Family::kGradientBoosting, {{"learning_rate", 0}}), r);
  double mean = 0;
  for (double y : r.target) mean += y;
  mean /= static_cast<double>(r.n_samples());
  for (double v : reg->Predict(Probe(20, 3, 3, -1, 1))) CHECK(v == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("gbt: first root split on rule-labelled data matches the exhaustive oracle") {
  const Dataset d = SixPredicateData();
  const auto model = Fit(Config(Family::kGradientBoosting, {{"n_trees", 1}}), d);
  const auto& root = dynamic_cast<const GradientBoostingModel&>(*model).rounds()[0][0].nodes()[0];
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < d.n_samples(); ++i) {
    const auto r = d.features.row(i);
    rows.emplace_back(r.begin(), r.end());
  }
  const auto [feature, threshold] = oracle::BestGiniSplit(rows, d.target);
  CHECK(static_cast<std::size_t>(root.feature) == feature);
  CHECK(root.threshold == doctest::Approx(threshold).epsilon(1e-12));
}

TEST_CASE("dt: root split on two-interval data uses a rule feature") {
  const Dataset d = GenerateSynthetic(
      ParseRuleSpec("n_features = 17\nF3, 0.7, 0.9\nF6, 0.2, 0.35\n"), 2000, 7);
  const auto model = Fit(Config(Family::kDecisionTree, {{"max_depth", 1}}), d);
  const auto& root = dynamic_cast<const DecisionTreeModel&>(*model).tree().nodes()[0];
  const std::set<int> rule_features = {2, 5};
  CHECK(rule_features.count(root.feature) == 1);
}

TEST_CASE("grid search: single point, selection and rejection") {
  const Dataset d = Separable(100, 18);
  ParamGrid single{Family::kDecisionTree, {{"max_depth", {2}}}};
  const auto one = GridSearch(single, d, 3, "auc", 1);
  CHECK(one.best.params.at("max_depth") == 2);
  CHECK(one.scores.size() == 1);

  ParamGrid bad{Family::kDecisionTree, {{"max_depth", {}}}};
  CHECK_THROWS(GridSearch(bad, d, 3, "auc", 1));
  CHECK_THROWS_AS(GridSearch(single, d, 101, "auc", 1), ValidationError);
  CHECK_THROWS_AS(GridSearch(single, d, 3, "r2", 1), ValidationError);
}

TEST_CASE("grid search: deeper tree wins on the six-predicate data") {
  const Dataset d = SixPredicateData();
  ParamGrid grid{Family::kDecisionTree, {{"max_depth", {1, 8}}}};
  const auto result = GridSearch(grid, d, 5, "auc", 3);
  REQUIRE(result.scores.size() == 2);
  const double shallow = result.scores[0].second, deep = result.scores[1].second;
  CAPTURE(shallow);
  CAPTURE(deep);
  CHECK(result.best.params.at("max_depth") == (deep > shallow ? 8 : 1));
  CHECK(deep > shallow);
}

TEST_CASE("grid search: worker count does not change the result") {
  const Dataset d = Smooth(120, 19, Task::kClassification);
  const ParamGrid grid = DefaultGrid(Family::kRandomForest);
  const auto a = GridSearch(grid, d, 3, "auc", 5, 1);
  const auto b = GridSearch(grid, d, 3, "auc", 5, 4);
  CHECK(a.best.params == b.best.params);
  CHECK(a.scores == b.scores);
}

TEST_CASE("persistence: reloaded models predict bit-identically") {
  const Dataset c = Smooth(120, 20, Task::kClassification);
  const Dataset r = Smooth(120, 21, Task::kRegression);
  const Matrix probe = Probe(50, 3, 4, -1, 1);
  for (const Dataset* d : {&c, &r}) {
    for (Family f : kAllFamilies) {
      CAPTURE(FamilyId(f));
      const auto model = Fit(Config(f), *d);
      std::stringstream text;
      SaveModel(*model, text);
      const auto back = LoadModel(text);
      CHECK(back->family() == f);
      CHECK(back->Predict(probe) == model->Predict(probe));
      CHECK(back->Response(probe) == model->Response(probe));
      std::stringstream again;
      SaveModel(*back, again);
      CHECK(again.str() == text.str());
    }
  }
}

TEST_CASE("persistence: golden file") {
  const Dataset d = MakeDataset(Matrix(6, 2, {0, 0, 1, 0, 2, 1, 3, 1, 4, 0, 5, 1}),
                                {0, 0, 0, 1, 1, 1}, Task::kClassification);
  const auto model = Fit(Config(Family::kDecisionTree, {{"max_depth", 2}}, 42), d);
  std::stringstream text;
  SaveModel(*model, text);
  const std::filesystem::path golden = std::filesystem::path(ATTRIB_TEST_DATA) / "dt_small.model";
  std::ifstream in(golden);
  REQUIRE(in.good());
  std::stringstream expected;
  expected << in.rdbuf();
  CHECK(text.str() == expected.str());
  CHECK(LoadModel(golden)->Predict(d.features) == model->Predict(d.features));
}

TEST_CASE("persistence: malformed input is rejected") {
  std::stringstream bad("attrib-model 99\n");
  CHECK_THROWS(LoadModel(bad));
  std::stringstream garbage("hello world");
  CHECK_THROWS(LoadModel(garbage));
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(ValidateConfig(Config(Family::kKnn, {{"depth", 3}})), ValidationError);
  CHECK_THROWS_AS(ParseFamily("svm"), ValidationError);
  CHECK(ParseFamily("RF") == Family::kRandomForest);
  CHECK(DefaultGrid(Family::kDecisionTree).Expand().size() == 4);
  CHECK(DefaultGrid(Family::kRandomForest).Expand().size() == 4);
}
