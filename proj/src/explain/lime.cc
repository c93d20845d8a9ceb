#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "attrib/error.h"
#include "attrib/explain.h"
#include "attrib/rng.h"

namespace attrib {
namespace {

std::size_t BinOf(const std::vector<double>& edges, double value) {
  return static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), value) -
                                  edges.begin());
}

}  // namespace

std::vector<std::vector<double>> QuartileEdges(const Matrix& data) {
  std::vector<std::vector<double>> edges(data.cols());
  if (data.empty()) return edges;
  for (std::size_t j = 0; j < data.cols(); ++j) {
    std::vector<double> column = data.column(j);
    std::sort(column.begin(), column.end());
    const double max = column.back();
    for (double q : {0.25, 0.5, 0.75}) {
      const double e = Quantile(column, q);
      if (e < max && (edges[j].empty() || e > edges[j].back())) edges[j].push_back(e);
    }
  }
  return edges;
}

LocalExplanation LimeExplain(const Model& model, std::span<const double> x,
                             const Dataset& data, const LimeOptions& options,
                             std::uint64_t seed, std::size_t sample_id) {
  return LimeExplain(model, x, data, QuartileEdges(data.features), options, seed,
                     sample_id);
}

LocalExplanation LimeExplain(const Model& model, std::span<const double> x,
                             const Dataset& data,
                             const std::vector<std::vector<double>>& edges,
                             const LimeOptions& options, std::uint64_t seed,
                             std::size_t sample_id) {
  const std::size_t m = data.n_features(), n = data.n_samples();
  if (x.size() != m || model.n_features() != m || edges.size() != m) {
    throw ValidationError("LIME input width does not match the model");
  }
  if (n == 0) throw ValidationError("LIME needs training data");
  if (options.n_perturbations < 2) throw ValidationError("LIME needs at least 2 perturbations");

  LocalExplanation out;
  out.sample_id = sample_id;
  out.attribution.assign(m, 0.0);
  out.feature_values.assign(x.begin(), x.end());
  if (model.task() == Task::kClassification) {
    out.probabilities = model.PredictProba(Matrix(1, m, {x.begin(), x.end()})).data();
  } else {
    out.probabilities = {model.Response(x)};
  }

  std::vector<std::size_t> active;
  std::vector<std::size_t> x_bin(m, 0);
  for (std::size_t j = 0; j < m; ++j) {
    if (edges[j].empty()) continue;
    active.push_back(j);
    x_bin[j] = BinOf(edges[j], x[j]);
  }
  if (active.empty()) return out;

  // Row 0 is x itself. Other rows redraw each active feature from a random
  // training row; a draw landing in x's bin keeps x's value.
  const std::size_t p = static_cast<std::size_t>(options.n_perturbations);
  const std::size_t a_count = active.size();
  Matrix samples(p, m);
  Eigen::MatrixXd z = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(p),
                                            static_cast<Eigen::Index>(a_count));
  Rng rng(seed);
  for (std::size_t r = 0; r < p; ++r) {
    auto row = samples.row(r);
    std::copy(x.begin(), x.end(), row.begin());
    if (r == 0) continue;
    for (std::size_t a = 0; a < a_count; ++a) {
      const std::size_t j = active[a];
      const double drawn = data.features(rng.Index(n), j);
      if (BinOf(edges[j], drawn) != x_bin[j]) {
        row[j] = drawn;
        z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a)) = 0.0;
      }
    }
  }
  const std::vector<double> y = model.Response(samples);

  const double width = options.kernel_width > 0.0
                           ? options.kernel_width
                           : 0.75 * std::sqrt(static_cast<double>(m));
  Eigen::VectorXd w(static_cast<Eigen::Index>(p));
  Eigen::VectorXd yv(static_cast<Eigen::Index>(p));
  for (std::size_t r = 0; r < p; ++r) {
    const auto ri = static_cast<Eigen::Index>(r);
    const double d2 = (1.0 - z.row(ri).array()).square().sum();
    w[ri] = std::sqrt(std::exp(-d2 / (width * width)));
    yv[ri] = y[r];
  }

  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  std::vector<double> coef(a_count, 0.0);
  if (*hi > *lo) {
    const double wsum = w.sum();
    const Eigen::RowVectorXd z_mean = (w.transpose() * z) / wsum;
    const double y_mean = w.dot(yv) / wsum;
    const Eigen::MatrixXd zc = z.rowwise() - z_mean;
    const Eigen::VectorXd yc = yv.array() - y_mean;
    Eigen::MatrixXd lhs = zc.transpose() * w.asDiagonal() * zc;
    lhs.diagonal().array() += options.ridge;
    const Eigen::VectorXd rhs = zc.transpose() * (w.array() * yc.array()).matrix();
    const Eigen::VectorXd beta = lhs.ldlt().solve(rhs);
    for (std::size_t a = 0; a < a_count; ++a) coef[a] = beta[static_cast<Eigen::Index>(a)];
  }
  for (std::size_t a = 0; a < a_count; ++a) out.attribution[active[a]] = coef[a];

  std::vector<std::size_t> order(a_count);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return std::abs(coef[l]) > std::abs(coef[r]);
  });
  const auto names = data.feature_names();
  for (std::size_t a : order) {
    if (out.rules.size() >= static_cast<std::size_t>(std::max(options.n_rules, 0))) break;
    if (coef[a] == 0.0) break;
    const std::size_t j = active[a];
    RuleTerm rule;
    rule.feature = j;
    rule.name = names[j];
    if (x_bin[j] > 0) rule.lower = edges[j][x_bin[j] - 1];
    if (x_bin[j] < edges[j].size()) rule.upper = edges[j][x_bin[j]];
    rule.direction =
        coef[a] > 0.0 ? RuleDirection::kSupportsClass1 : RuleDirection::kSupportsClass0;
    rule.weight = coef[a];
    out.rules.push_back(std::move(rule));
  }
  return out;
}

}  // namespace attrib
