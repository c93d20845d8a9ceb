#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles/oracles.h"

#include "attrib/error.h"
#include "attrib/metrics.h"
#include "attrib/rng.h"

using namespace attrib;
using doctest::Approx;

TEST_CASE("classification: perfect predictions") {
  const std::vector<double> y = {0, 0, 1, 1};
  const auto r = ClassificationReport(y, y, std::vector<double>{0.1, 0.2, 0.8, 0.9});
  for (const char* m : {"accuracy", "precision", "recall", "f1", "specificity", "auc"}) {
    CHECK(r.at(m) == 1.0);
  }
  CHECK(r.confusion.at(0, 0) == 2);
  CHECK(r.confusion.at(1, 1) == 2);
  CHECK(r.confusion.at(0, 1) == 0);
}

TEST_CASE("auc: perfect, reversed and tied scores") {
  const std::vector<double> y = {0, 0, 1, 1};
  CHECK(RocAuc(y, std::vector<double>{0.1, 0.2, 0.8, 0.9}) == 1.0);
  CHECK(RocAuc(y, std::vector<double>{0.9, 0.8, 0.2, 0.1}) == 0.0);
  CHECK(RocAuc(y, std::vector<double>{0.5, 0.5, 0.5, 0.5}) == 0.5);
  CHECK(std::isnan(RocAuc(std::vector<double>{1, 1}, std::vector<double>{0.1, 0.2})));
}

TEST_CASE("auc: matches the pairwise oracle on 1000 random vectors") {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.Index(40);
    std::vector<double> y(n), s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<double>(rng.Index(2));
      // Coarse scores create many ties.
      s[i] = static_cast<double>(rng.Index(6)) / 5.0;
    }
    y[0] = 0;
    y[1] = 1;
    CHECK(std::abs(RocAuc(y, s) - oracle::PairwiseAuc(y, s)) <= 1e-12);
  }
}

TEST_CASE("auc: invariant under strictly increasing transforms") {
  Rng rng(3);
  std::vector<double> y(60), s(60), t(60);
  for (std::size_t i = 0; i < 60; ++i) {
    y[i] = static_cast<double>(rng.Index(2));
    s[i] = rng.Uniform();
    t[i] = std::exp(3 * s[i]) + 1;
  }
  CHECK(RocAuc(y, s) == RocAuc(y, t));
}

TEST_CASE("classification: undefined ratios are 0 with a flag") {
  const std::vector<double> y = {0, 0, 0};
  const auto r = ClassificationReport(y, y, {});
  CHECK(r.at("precision") == 0.0);
  CHECK(r.undefined.count("precision") == 1);
  CHECK(r.undefined.count("recall") == 1);
  CHECK(r.at("accuracy") == 1.0);
}

TEST_CASE("classification: accuracy equals trace over total") {
  Rng rng(5);
  std::vector<double> y(97), p(97);
  for (std::size_t i = 0; i < 97; ++i) {
    y[i] = static_cast<double>(rng.Index(2));
    p[i] = static_cast<double>(rng.Index(2));
  }
  const auto r = ClassificationReport(y, p, {});
  CHECK(r.at("accuracy") ==
        static_cast<double>(r.confusion.trace()) / static_cast<double>(r.confusion.total()));
  CHECK(r.confusion.total() == 97);
}

TEST_CASE("classification: swapping labels swaps recall and specificity") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 4 + rng.Index(12);
    std::vector<double> y(n), p(n), ys(n), ps(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<double>(rng.Index(2));
      p[i] = static_cast<double>(rng.Index(2));
      ys[i] = 1 - y[i];
      ps[i] = 1 - p[i];
    }
    const auto a = ClassificationReport(y, p, {});
    const auto b = ClassificationReport(ys, ps, {});
    CHECK(a.at("recall") == b.at("specificity"));
    CHECK(a.at("specificity") == b.at("recall"));
    // Brute-force negative predictive value of the original labelling.
    double tn = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      tn += y[i] == 0 && p[i] == 0;
      fn += y[i] == 1 && p[i] == 0;
    }
    const double npv = tn + fn == 0 ? 0.0 : tn / (tn + fn);
    CHECK(b.at("precision") == Approx(npv).epsilon(1e-15));
  }
}

TEST_CASE("classification: length mismatch is an error") {
  CHECK_THROWS(ClassificationReport(std::vector<double>{0, 1}, std::vector<double>{0}, {}));
}

TEST_CASE("regression: identity and mean predictor") {
  const std::vector<double> y = {1, 2, 4, 8};
  const auto r = RegressionReport(y, y);
  CHECK(r.at("r2") == 1.0);
  CHECK(r.at("pearson") == Approx(1.0).epsilon(1e-15));
  CHECK(r.at("mae") == 0.0);
  CHECK(r.at("mse") == 0.0);
  CHECK(r.at("mape") == 0.0);
  const std::vector<double> mean(4, 3.75);
  CHECK(RegressionReport(y, mean).at("r2") == Approx(0.0).epsilon(1e-15));
}

TEST_CASE("regression: constant target flags pearson and r2") {
  const std::vector<double> y = {2, 2, 2};
  const auto r = RegressionReport(y, std::vector<double>{1, 2, 3});
  CHECK(r.undefined.count("r2") == 1);
  CHECK(r.undefined.count("pearson") == 1);
}

TEST_CASE("regression: mape skips zero targets") {
  const auto r = RegressionReport(std::vector<double>{0, 2, 4}, std::vector<double>{5, 1, 5});
  CHECK(r.at("mape") == Approx((0.5 + 0.25) / 2));
}

TEST_CASE("regression: pearson squared equals r2 for least-squares affine fits") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng.Index(30);
    std::vector<double> y(n), z(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.Normal();
      z[i] = y[i] + rng.Normal();
    }
    // Least-squares fit of y on z gives predictions a + b z.
    double mz = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mz += z[i];
      my += y[i];
    }
    mz /= n;
    my /= n;
    double szz = 0, szy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      szz += (z[i] - mz) * (z[i] - mz);
      szy += (z[i] - mz) * (y[i] - my);
    }
    const double b = szy / szz, a = my - b * mz;
    std::vector<double> pred(n);
    for (std::size_t i = 0; i < n; ++i) pred[i] = a + b * z[i];
    const auto r = RegressionReport(y, pred);
    CHECK(r.at("pearson") * r.at("pearson") == Approx(r.at("r2")).epsilon(1e-9));
    CHECK(r.at("r2") <= 1.0);
  }
}

TEST_CASE("metric registry") {
  CHECK(GetMetric("auc").higher_is_better);
  CHECK_FALSE(GetMetric("mse").higher_is_better);
  CHECK_THROWS_AS(GetMetric("map"), ValidationError);
  CHECK_THROWS_AS(CheckMetricTask("r2", Task::kClassification), ValidationError);
  CHECK(DefaultMetric(Task::kRegression) == "r2");
}
