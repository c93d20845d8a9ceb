#include <cmath>

#include <Eigen/Dense>

#include "attrib/error.h"
#include "attrib/explain.h"
#include "attrib/rng.h"

namespace attrib {
namespace {

constexpr std::size_t kBatchRows = 1 << 14;

struct Coalition {
  std::vector<char> mask;  // over active features
  double weight = 0.0;
};

double Binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return r;
}

// Mean model response over the background with the coalition's features
// taken from x.
std::vector<double> CoalitionValues(const Model& model, std::span<const double> x,
                                    const Matrix& background,
                                    const std::vector<std::size_t>& active,
                                    const std::vector<Coalition>& coalitions) {
  const std::size_t nb = background.rows(), m = background.cols();
  const std::size_t per_batch = std::max<std::size_t>(1, kBatchRows / nb);
  std::vector<double> values(coalitions.size(), 0.0);
  for (std::size_t start = 0; start < coalitions.size(); start += per_batch) {
    const std::size_t end = std::min(coalitions.size(), start + per_batch);
    Matrix rows((end - start) * nb, m);
    for (std::size_t c = start; c < end; ++c) {
      for (std::size_t b = 0; b < nb; ++b) {
        auto row = rows.row((c - start) * nb + b);
        const auto src = background.row(b);
        std::copy(src.begin(), src.end(), row.begin());
        for (std::size_t a = 0; a < active.size(); ++a) {
          if (coalitions[c].mask[a]) row[active[a]] = x[active[a]];
        }
      }
    }
    const std::vector<double> out = model.Response(rows);
    for (std::size_t c = start; c < end; ++c) {
      double sum = 0.0;
      for (std::size_t b = 0; b < nb; ++b) sum += out[(c - start) * nb + b];
      values[c] = sum / static_cast<double>(nb);
    }
  }
  return values;
}

}  // namespace

AttributionVector KernelShap(const Model& model, std::span<const double> x,
                             const Matrix& background, const ShapOptions& options,
                             std::uint64_t seed) {
  const std::size_t m = model.n_features();
  if (x.size() != m || background.cols() != m) {
    throw ValidationError("kernel SHAP input width does not match the model");
  }
  if (background.empty()) throw ValidationError("kernel SHAP needs a background sample");

  AttributionVector out;
  out.method = "shap";
  out.values.assign(m, 0.0);
  out.dispersion.assign(m, 0.0);

  // Features equal to x in every background row cannot change any coalition
  // value and receive exactly zero.
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t b = 0; b < background.rows(); ++b) {
      if (background(b, j) != x[j]) {
        active.push_back(j);
        break;
      }
    }
  }
  const std::size_t ma = active.size();

  const std::vector<double> base_out = model.Response(background);
  double base = 0.0;
  for (double v : base_out) base += v;
  base /= static_cast<double>(base_out.size());
  const double fx = model.Response(x);
  const double delta = fx - base;
  if (ma == 0) return out;
  if (ma == 1) {
    out.values[active[0]] = delta;
    return out;
  }

  std::vector<Coalition> coalitions;
  const bool exact = ma < 40 && (std::size_t{1} << ma) - 2 <= options.budget;
  if (exact) {
    const std::size_t total = (std::size_t{1} << ma) - 1;
    coalitions.reserve(total - 1);
    for (std::size_t bits = 1; bits < total; ++bits) {
      Coalition c;
      c.mask.resize(ma);
      std::size_t s = 0;
      for (std::size_t a = 0; a < ma; ++a) {
        c.mask[a] = static_cast<char>((bits >> a) & 1u);
        s += c.mask[a];
      }
      c.weight = static_cast<double>(ma - 1) /
                 (Binomial(ma, s) * static_cast<double>(s) * static_cast<double>(ma - s));
      coalitions.push_back(std::move(c));
    }
  } else {
    std::vector<double> cumulative(ma - 1);
    double acc = 0.0;
    for (std::size_t s = 1; s < ma; ++s) {
      acc += 1.0 / (static_cast<double>(s) * static_cast<double>(ma - s));
      cumulative[s - 1] = acc;
    }
    Rng rng(seed);
    std::vector<std::size_t> order(ma);
    const std::size_t pairs = std::max<std::size_t>(1, options.budget / 2);
    coalitions.reserve(2 * pairs);
    for (std::size_t p = 0; p < pairs; ++p) {
      const double u = rng.Uniform() * acc;
      std::size_t s = 1;
      while (s < ma - 1 && cumulative[s - 1] <= u) ++s;
      for (std::size_t a = 0; a < ma; ++a) order[a] = a;
      for (std::size_t a = 0; a < s; ++a) std::swap(order[a], order[a + rng.Index(ma - a)]);
      Coalition c;
      c.mask.assign(ma, 0);
      for (std::size_t a = 0; a < s; ++a) c.mask[order[a]] = 1;
      c.weight = 1.0;
      Coalition complement = c;
      for (auto& bit : complement.mask) bit = static_cast<char>(1 - bit);
      coalitions.push_back(std::move(c));
      coalitions.push_back(std::move(complement));
    }
  }

  const std::vector<double> v = CoalitionValues(model, x, background, active, coalitions);

  // The efficiency constraint eliminates the last active feature:
  // phi_last = delta - sum(others).
  const Eigen::Index k = static_cast<Eigen::Index>(ma - 1);
  Eigen::MatrixXd xtwx = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd xtwy = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd z(k);
  for (std::size_t c = 0; c < coalitions.size(); ++c) {
    const auto& mask = coalitions[c].mask;
    const double last = mask[ma - 1];
    for (Eigen::Index a = 0; a < k; ++a) z[a] = mask[static_cast<std::size_t>(a)] - last;
    const double y = v[c] - base - last * delta;
    const double w = coalitions[c].weight;
    xtwx.selfadjointView<Eigen::Lower>().rankUpdate(z, w);
    xtwy += w * y * z;
  }
  Eigen::MatrixXd full = xtwx.selfadjointView<Eigen::Lower>();
  if (!exact) full.diagonal().array() += 1e-10 * std::max(1.0, full.diagonal().mean());
  const Eigen::VectorXd phi = full.ldlt().solve(xtwy);

  double sum = 0.0;
  for (Eigen::Index a = 0; a < k; ++a) {
    out.values[active[static_cast<std::size_t>(a)]] = phi[a];
    sum += phi[a];
  }
  out.values[active[ma - 1]] = delta - sum;
  return out;
}

}  // namespace attrib
