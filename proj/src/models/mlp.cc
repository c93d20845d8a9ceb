#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "attrib/error.h"
#include "attrib/models/families.h"
#include "eigen_view.h"
#include "serial.h"

namespace attrib {
namespace {

struct Adam {
  double rate;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int step = 0;
};

struct Param {
  RowMajorMatrix value, m, v;

  explicit Param(RowMajorMatrix init)
      : value(std::move(init)),
        m(RowMajorMatrix::Zero(value.rows(), value.cols())),
        v(RowMajorMatrix::Zero(value.rows(), value.cols())) {}

  void Update(const RowMajorMatrix& grad, const Adam& adam) {
    m = adam.beta1 * m + (1 - adam.beta1) * grad;
    v = adam.beta2 * v + (1 - adam.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1 - std::pow(adam.beta1, adam.step);
    const double c2 = 1 - std::pow(adam.beta2, adam.step);
    value.array() -= adam.rate * (m.array() / c1) / ((v.array() / c2).sqrt() + adam.epsilon);
  }
};

void SoftmaxRows(RowMajorMatrix& logits) {
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

}  // namespace

MlpModel::MlpModel(ModelConfig config, Task task, std::size_t n_features,
                   std::size_t n_classes, Standardizer standardizer,
                   std::vector<Layer> layers, double target_mean, double target_scale)
    : Model(std::move(config), task, n_features, n_classes),
      standardizer_(std::move(standardizer)),
      layers_(std::move(layers)),
      target_mean_(target_mean),
      target_scale_(target_scale) {
  if (layers_.empty()) throw ValidationError("mlp needs at least one layer");
  std::size_t width = n_features;
  for (const auto& layer : layers_) {
    if (layer.weights.rows() != width || layer.bias.size() != layer.weights.cols()) {
      throw ValidationError("mlp layer shapes are inconsistent");
    }
    width = layer.weights.cols();
  }
  const std::size_t expected = task == Task::kRegression ? 1 : n_classes;
  if (width != expected) throw ValidationError("mlp output width mismatch");
}

std::unique_ptr<MlpModel> MlpModel::Train(const ModelConfig& config, const Dataset& train) {
  const auto hidden1 = static_cast<Eigen::Index>(config.Get("hidden", 16));
  const auto hidden2 = static_cast<Eigen::Index>(config.Get("hidden2", 0));
  const int epochs = static_cast<int>(config.Get("epochs", 300));
  const double l2 = config.Get("l2", 1e-4);
  Adam adam{config.Get("learning_rate", 0.01)};
  if (hidden1 <= 0) throw ValidationError("mlp needs hidden >= 1");

  const bool classification = train.task == Task::kClassification;
  Standardizer standardizer = Standardizer::Fit(train.features);
  const Matrix standardized = standardizer.Apply(train.features);
  const RowMajorMatrix x = View(standardized);
  const Eigen::Index n = x.rows();
  const Eigen::Index outputs = classification ? static_cast<Eigen::Index>(train.n_classes()) : 1;

  double target_mean = 0.0, target_scale = 1.0;
  RowMajorMatrix y = RowMajorMatrix::Zero(n, outputs);
  if (classification) {
    for (Eigen::Index i = 0; i < n; ++i) y(i, static_cast<Eigen::Index>(train.target[i])) = 1.0;
  } else {
    target_mean = std::accumulate(train.target.begin(), train.target.end(), 0.0) / n;
    double var = 0.0;
    for (double t : train.target) var += (t - target_mean) * (t - target_mean);
    target_scale = std::sqrt(var / n);
    if (target_scale <= 1e-12) target_scale = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) y(i, 0) = (train.target[i] - target_mean) / target_scale;
  }

  std::vector<Eigen::Index> widths = {x.cols(), hidden1};
  if (hidden2 > 0) widths.push_back(hidden2);
  widths.push_back(outputs);

  Rng rng(DeriveSeed(config.seed, 0));
  std::vector<Param> weights, biases;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(widths[l]));
    RowMajorMatrix w(widths[l], widths[l + 1]);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.Uniform(-limit, limit);
    weights.emplace_back(std::move(w));
    biases.emplace_back(RowMajorMatrix::Zero(1, widths[l + 1]));
  }

  const std::size_t n_layers = weights.size();
  std::vector<RowMajorMatrix> pre(n_layers), act(n_layers + 1);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    act[0] = x;
    for (std::size_t l = 0; l < n_layers; ++l) {
      pre[l] = act[l] * weights[l].value;
      pre[l].rowwise() += biases[l].value.row(0);
      act[l + 1] = l + 1 < n_layers ? RowMajorMatrix(pre[l].cwiseMax(0.0)) : pre[l];
    }
    RowMajorMatrix delta = act[n_layers];
    if (classification) SoftmaxRows(delta);
    delta = (delta - y) / static_cast<double>(n);

    ++adam.step;
    for (std::size_t l = n_layers; l-- > 0;) {
      RowMajorMatrix grad_w = act[l].transpose() * delta + l2 * weights[l].value;
      RowMajorMatrix grad_b = delta.colwise().sum();
      if (l > 0) {
        RowMajorMatrix back = delta * weights[l].value.transpose();
        delta = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
      }
      weights[l].Update(grad_w, adam);
      biases[l].Update(grad_b, adam);
    }
  }

  std::vector<Layer> layers;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& b = biases[l].value;
    layers.push_back({ToMatrix(weights[l].value),
                      std::vector<double>(b.data(), b.data() + b.size())});
  }
  return std::make_unique<MlpModel>(config, train.task, train.n_features(), train.n_classes(),
                                    std::move(standardizer), std::move(layers), target_mean,
                                    target_scale);
}

Matrix MlpModel::Forward(const Matrix& x) const {
  const Matrix standardized = standardizer_.Apply(x);
  RowMajorMatrix a = View(standardized);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    RowMajorMatrix z = a * View(layer.weights);
    z.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(layer.bias.data(),
                                                        static_cast<Eigen::Index>(layer.bias.size()));
    a = l + 1 < layers_.size() ? RowMajorMatrix(z.cwiseMax(0.0)) : z;
  }
  return ToMatrix(a);
}

Matrix MlpModel::Probabilities(const Matrix& x) const {
  Matrix logits = Forward(x);
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    const double top = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) sum += (v = std::exp(v - top));
    for (double& v : row) v /= sum;
  }
  return logits;
}

std::vector<double> MlpModel::Regress(const Matrix& x) const {
  std::vector<double> out = Forward(x).column(0);
  for (double& v : out) v = v * target_scale_ + target_mean_;
  return out;
}

std::vector<double> MlpModel::ResponseGradient(std::span<const double> x) const {
  const Matrix standardized =
      standardizer_.Apply(Matrix(1, x.size(), std::vector<double>(x.begin(), x.end())));
  std::vector<std::vector<double>> pre;
  std::vector<double> a = standardized.data();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    std::vector<double> z = layer.bias;
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < z.size(); ++j) z[j] += a[i] * layer.weights(i, j);
    }
    pre.push_back(z);
    a = z;
    if (l + 1 < layers_.size()) {
      for (double& v : a) v = std::max(v, 0.0);
    }
  }

  // d(response) / d(output pre-activations).
  std::vector<double> delta(a.size());
  if (task() == Task::kRegression) {
    delta[0] = target_scale_;
  } else {
    const double top = *std::max_element(a.begin(), a.end());
    std::vector<double> p(a.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) sum += (p[k] = std::exp(a[k] - top));
    for (double& v : p) v /= sum;
    const std::size_t c = n_classes() == 2
                              ? 1
                              : static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    for (std::size_t k = 0; k < a.size(); ++k) delta[k] = p[c] * ((k == c ? 1.0 : 0.0) - p[k]);
  }

  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& w = layers_[l].weights;
    std::vector<double> back(w.rows(), 0.0);
    for (std::size_t i = 0; i < w.rows(); ++i) {
      for (std::size_t j = 0; j < w.cols(); ++j) back[i] += w(i, j) * delta[j];
    }
    if (l > 0) {
      for (std::size_t i = 0; i < back.size(); ++i) {
        if (pre[l - 1][i] <= 0.0) back[i] = 0.0;
      }
    }
    delta = std::move(back);
  }
  for (std::size_t c = 0; c < delta.size(); ++c) delta[c] /= standardizer_.scale[c];
  return delta;
}

void MlpModel::WriteState(std::ostream& out) const {
  standardizer_.Write(out);
  out << "target " << FormatNumber(target_mean_) << ' ' << FormatNumber(target_scale_) << '\n';
  out << "layers " << layers_.size() << '\n';
  for (const auto& layer : layers_) {
    out << "layer " << layer.weights.rows() << ' ' << layer.weights.cols() << '\n';
    serial::WriteKeyed(out, "w", layer.weights.data());
    serial::WriteKeyed(out, "b", layer.bias);
  }
}

std::unique_ptr<MlpModel> MlpModel::ReadState(ModelConfig config, Task task,
                                              std::size_t n_features, std::size_t n_classes,
                                              std::istream& in) {
  Standardizer standardizer = Standardizer::Read(in);
  serial::Expect(in, "target");
  const double mean = serial::ReadNumber(in);
  const double scale = serial::ReadNumber(in);
  serial::Expect(in, "layers");
  const std::size_t n_layers = serial::ReadCount(in);
  std::vector<Layer> layers;
  for (std::size_t l = 0; l < n_layers; ++l) {
    serial::Expect(in, "layer");
    const std::size_t rows = serial::ReadCount(in);
    const std::size_t cols = serial::ReadCount(in);
    std::vector<double> w = serial::ReadKeyed(in, "w");
    if (w.size() != rows * cols) throw ValidationError("model file: bad mlp layer");
    layers.push_back({Matrix(rows, cols, std::move(w)), serial::ReadKeyed(in, "b")});
  }
  return std::make_unique<MlpModel>(std::move(config), task, n_features, n_classes,
                                    std::move(standardizer), std::move(layers), mean, scale);
}

}  // namespace attrib
