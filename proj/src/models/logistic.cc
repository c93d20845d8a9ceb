#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "attrib/error.h"
#include "attrib/models/families.h"
#include "eigen_view.h"
#include "serial.h"

namespace attrib {
namespace {

constexpr double kProbClip = 1e-12;

double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double LogLoss(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // log(1 + e^eta) - y * eta, computed stably.
    const double e = eta[i];
    loss += (e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e))) - y[i] * e;
  }
  return loss / static_cast<double>(eta.size());
}

struct BinaryFit {
  std::vector<double> weights;
  double bias;
};

// Damped Newton on the L2-penalised mean log loss. The intercept is not
// penalised.
BinaryFit FitBinary(const RowMajorMatrix& z, const Eigen::VectorXd& y, double l2,
                    int max_iter) {
  const Eigen::Index n = z.rows(), m = z.cols();
  const double positives = y.sum();
  if (positives == 0.0 || positives == static_cast<double>(n)) {
    const double p = std::clamp(positives / static_cast<double>(n), kProbClip, 1 - kProbClip);
    return {std::vector<double>(m, 0.0), std::log(p / (1 - p))};
  }
  Eigen::MatrixXd design(n, m + 1);
  design.leftCols(m) = z;
  design.col(m).setOnes();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(m + 1);
  const auto objective = [&](const Eigen::VectorXd& t) {
    return LogLoss(design * t, y) + 0.5 * l2 * t.head(m).squaredNorm();
  };
  double current = objective(theta);
  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::VectorXd eta = design * theta;
    Eigen::VectorXd p(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p[i] = Sigmoid(eta[i]);
      w[i] = std::max(p[i] * (1 - p[i]), 1e-12);
    }
    Eigen::VectorXd grad = design.transpose() * (p - y) / static_cast<double>(n);
    grad.head(m) += l2 * theta.head(m);
    Eigen::MatrixXd hessian =
        design.transpose() * w.asDiagonal() * design / static_cast<double>(n);
    hessian.diagonal().head(m).array() += l2;
    hessian.diagonal()[m] += 1e-12;
    const Eigen::VectorXd step = hessian.ldlt().solve(grad);
    double scale = 1.0;
    bool improved = false;
    for (int half = 0; half < 40; ++half, scale *= 0.5) {
      const Eigen::VectorXd candidate = theta - scale * step;
      const double value = objective(candidate);
      if (value <= current) {
        theta = candidate;
        improved = current - value > 1e-15;
        current = value;
        break;
      }
    }
    if (!improved || step.lpNorm<Eigen::Infinity>() * scale < 1e-10) break;
  }
  return {std::vector<double>(theta.data(), theta.data() + m), theta[m]};
}

}  // namespace

LogisticModel::LogisticModel(ModelConfig config, Task task, std::size_t n_features,
                             std::size_t n_classes, Standardizer standardizer,
                             std::vector<std::vector<double>> weights,
                             std::vector<double> bias)
    : Model(std::move(config), task, n_features, n_classes),
      standardizer_(std::move(standardizer)),
      weights_(std::move(weights)),
      bias_(std::move(bias)) {
  if (weights_.empty() || weights_.size() != bias_.size()) {
    throw ValidationError("logistic model needs matching weights and biases");
  }
  for (const auto& w : weights_) {
    if (w.size() != n_features) throw ValidationError("logistic weight length mismatch");
  }
}

std::unique_ptr<LogisticModel> LogisticModel::Train(const ModelConfig& config,
                                                    const Dataset& train) {
  const double l2 = config.Get("l2", 1e-4);
  const int max_iter = static_cast<int>(config.Get("max_iter", 100));
  Standardizer standardizer = Standardizer::Fit(train.features);
  const Matrix standardized = standardizer.Apply(train.features);
  const RowMajorMatrix z = View(standardized);
  const Eigen::Index n = z.rows(), m = z.cols();
  std::vector<std::vector<double>> weights;
  std::vector<double> bias;

  if (train.task == Task::kRegression) {
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(train.target.data(), n);
    const double mean = y.mean();
    Eigen::MatrixXd gram = z.transpose() * z / static_cast<double>(n);
    gram.diagonal().array() += std::max(l2, 1e-12);
    const Eigen::VectorXd rhs = z.transpose() * (y.array() - mean).matrix() / static_cast<double>(n);
    const Eigen::VectorXd w = gram.ldlt().solve(rhs);
    weights.emplace_back(w.data(), w.data() + m);
    bias.push_back(mean);
  } else {
    const std::size_t k = train.n_classes();
    const std::size_t n_outputs = k == 2 ? 1 : k;
    for (std::size_t o = 0; o < n_outputs; ++o) {
      const double positive = k == 2 ? 1.0 : static_cast<double>(o);
      Eigen::VectorXd y(n);
      for (Eigen::Index i = 0; i < n; ++i) y[i] = train.target[i] == positive ? 1.0 : 0.0;
      BinaryFit fit = FitBinary(z, y, l2, max_iter);
      weights.push_back(std::move(fit.weights));
      bias.push_back(fit.bias);
    }
  }
  return std::make_unique<LogisticModel>(config, train.task, train.n_features(),
                                         train.n_classes(), std::move(standardizer),
                                         std::move(weights), std::move(bias));
}

double LogisticModel::Linear(std::span<const double> z, std::size_t output) const {
  double eta = bias_[output];
  const auto& w = weights_[output];
  for (std::size_t c = 0; c < w.size(); ++c) eta += w[c] * z[c];
  return eta;
}

std::vector<double> LogisticModel::RawWeights(std::size_t output) const {
  std::vector<double> raw = weights_.at(output);
  for (std::size_t c = 0; c < raw.size(); ++c) raw[c] /= standardizer_.scale[c];
  return raw;
}

Matrix LogisticModel::Probabilities(const Matrix& x) const {
  const Matrix z = standardizer_.Apply(x);
  Matrix out(x.rows(), n_classes());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (weights_.size() == 1) {
      const double p = Sigmoid(Linear(z.row(r), 0));
      out(r, 0) = 1.0 - p;
      out(r, 1) = p;
      continue;
    }
    double sum = 0.0;
    for (std::size_t o = 0; o < weights_.size(); ++o) {
      sum += (out(r, o) = Sigmoid(Linear(z.row(r), o)));
    }
    for (double& p : out.row(r)) p /= sum;
  }
  return out;
}

std::vector<double> LogisticModel::Regress(const Matrix& x) const {
  const Matrix z = standardizer_.Apply(x);
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = Linear(z.row(r), 0);
  return out;
}

std::vector<double> LogisticModel::ResponseGradient(std::span<const double> x) const {
  const Matrix z = standardizer_.Apply(Matrix(1, x.size(), {x.begin(), x.end()}));
  const std::size_t m = n_features();
  std::vector<double> grad(m, 0.0);
  if (task() == Task::kRegression) return RawWeights(0);
  if (weights_.size() == 1) {
    const double p = Sigmoid(Linear(z.row(0), 0));
    const auto w = RawWeights(0);
    for (std::size_t c = 0; c < m; ++c) grad[c] = p * (1 - p) * w[c];
    return grad;
  }
  // One-vs-rest probabilities q_c = s_c / sum_j s_j.
  const std::size_t k = weights_.size();
  std::vector<double> s(k);
  double total = 0.0;
  for (std::size_t o = 0; o < k; ++o) total += (s[o] = Sigmoid(Linear(z.row(0), o)));
  const std::size_t c = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
  std::vector<double> dtotal(m, 0.0), dc(m, 0.0);
  for (std::size_t o = 0; o < k; ++o) {
    const auto w = RawWeights(o);
    for (std::size_t f = 0; f < m; ++f) {
      const double d = s[o] * (1 - s[o]) * w[f];
      dtotal[f] += d;
      if (o == c) dc[f] = d;
    }
  }
  for (std::size_t f = 0; f < m; ++f) {
    grad[f] = (dc[f] * total - s[c] * dtotal[f]) / (total * total);
  }
  return grad;
}

void LogisticModel::WriteState(std::ostream& out) const {
  standardizer_.Write(out);
  out << "outputs " << weights_.size() << '\n';
  for (std::size_t o = 0; o < weights_.size(); ++o) {
    serial::WriteKeyed(out, "weights", weights_[o]);
    out << "bias " << FormatNumber(bias_[o]) << '\n';
  }
}

std::unique_ptr<LogisticModel> LogisticModel::ReadState(ModelConfig config, Task task,
                                                        std::size_t n_features,
                                                        std::size_t n_classes,
                                                        std::istream& in) {
  Standardizer standardizer = Standardizer::Read(in);
  serial::Expect(in, "outputs");
  const std::size_t k = serial::ReadCount(in);
  std::vector<std::vector<double>> weights;
  std::vector<double> bias;
  for (std::size_t o = 0; o < k; ++o) {
    weights.push_back(serial::ReadKeyed(in, "weights"));
    serial::Expect(in, "bias");
    bias.push_back(serial::ReadNumber(in));
  }
  return std::make_unique<LogisticModel>(std::move(config), task, n_features, n_classes,
                                         std::move(standardizer), std::move(weights),
                                         std::move(bias));
}

}  // namespace attrib
