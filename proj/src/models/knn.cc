#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "attrib/error.h"
#include "attrib/models/families.h"
#include "serial.h"

namespace attrib {

Standardizer Standardizer::Fit(const Matrix& x) {
  Standardizer s;
  const std::size_t n = x.rows(), m = x.cols();
  s.mean.assign(m, 0.0);
  s.scale.assign(m, 1.0);
  if (n == 0) return s;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < m; ++c) s.mean[c] += x(r, c);
  }
  for (double& v : s.mean) v /= static_cast<double>(n);
  std::vector<double> var(m, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      const double d = x(r, c) - s.mean[c];
      var[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < m; ++c) {
    const double sd = std::sqrt(var[c] / static_cast<double>(n));
    s.scale[c] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Standardizer Standardizer::Identity(std::size_t n_features) {
  return {std::vector<double>(n_features, 0.0), std::vector<double>(n_features, 1.0)};
}

Matrix Standardizer::Apply(const Matrix& x) const {
  Matrix out = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) row[c] = (row[c] - mean[c]) / scale[c];
  }
  return out;
}

void Standardizer::Write(std::ostream& out) const {
  serial::WriteKeyed(out, "mean", mean);
  serial::WriteKeyed(out, "scale", scale);
}

Standardizer Standardizer::Read(std::istream& in) {
  Standardizer s;
  s.mean = serial::ReadKeyed(in, "mean");
  s.scale = serial::ReadKeyed(in, "scale");
  if (s.mean.size() != s.scale.size()) throw ValidationError("model file: bad standardizer");
  return s;
}

KnnModel::KnnModel(ModelConfig config, Task task, std::size_t n_features,
                   std::size_t n_classes, Standardizer standardizer, Matrix points,
                   std::vector<double> targets)
    : Model(std::move(config), task, n_features, n_classes),
      k_(static_cast<std::size_t>(this->config().Get("k", 5))),
      standardizer_(std::move(standardizer)),
      points_(std::move(points)),
      targets_(std::move(targets)) {
  if (k_ == 0) throw ValidationError("k must be positive");
  if (points_.rows() == 0) throw ValidationError("knn needs training points");
  k_ = std::min(k_, points_.rows());
}

std::unique_ptr<KnnModel> KnnModel::Train(const ModelConfig& config, const Dataset& train) {
  Standardizer standardizer = Standardizer::Fit(train.features);
  Matrix points = standardizer.Apply(train.features);
  return std::make_unique<KnnModel>(config, train.task, train.n_features(),
                                    train.n_classes(), std::move(standardizer),
                                    std::move(points), train.target);
}

void KnnModel::Neighbours(std::span<const double> query, std::vector<std::size_t>& out,
                          std::vector<std::pair<double, std::size_t>>& scratch) const {
  const std::size_t n = points_.rows(), m = points_.cols();
  // Max-heap of the k best (distance, index) pairs. Indices arrive in
  // increasing order, so a candidate whose partial distance already reaches
  // the worst kept distance can never displace it.
  scratch.clear();
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = points_.row(i).data();
    const bool full = scratch.size() == k_;
    const double bound = full ? scratch.front().first : 0.0;
    double d = 0.0;
    bool abandoned = false;
    for (std::size_t c = 0; c < m; ++c) {
      const double diff = p[c] - query[c];
      d += diff * diff;
      if (full && d >= bound) {
        abandoned = true;
        break;
      }
    }
    if (abandoned) continue;
    if (full) {
      std::pop_heap(scratch.begin(), scratch.end());
      scratch.pop_back();
    }
    scratch.emplace_back(d, i);
    std::push_heap(scratch.begin(), scratch.end());
  }
  std::sort(scratch.begin(), scratch.end());
  out.resize(scratch.size());
  for (std::size_t j = 0; j < scratch.size(); ++j) out[j] = scratch[j].second;
}

Matrix KnnModel::Probabilities(const Matrix& x) const {
  const Matrix z = standardizer_.Apply(x);
  Matrix out(x.rows(), n_classes());
  std::vector<std::size_t> nn;
  std::vector<std::pair<double, std::size_t>> scratch;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    Neighbours(z.row(r), nn, scratch);
    for (std::size_t i : nn) out(r, static_cast<std::size_t>(targets_[i])) += 1.0;
    for (double& p : out.row(r)) p /= static_cast<double>(k_);
  }
  return out;
}

std::vector<double> KnnModel::Regress(const Matrix& x) const {
  const Matrix z = standardizer_.Apply(x);
  std::vector<double> out(x.rows(), 0.0);
  std::vector<std::size_t> nn;
  std::vector<std::pair<double, std::size_t>> scratch;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    Neighbours(z.row(r), nn, scratch);
    for (std::size_t i : nn) out[r] += targets_[i];
    out[r] /= static_cast<double>(k_);
  }
  return out;
}

void KnnModel::WriteState(std::ostream& out) const {
  standardizer_.Write(out);
  out << "points " << points_.rows() << ' ' << points_.cols() << '\n';
  for (std::size_t r = 0; r < points_.rows(); ++r) {
    out << "row";
    serial::WriteNumbers(out, points_.row(r));
  }
  serial::WriteKeyed(out, "targets", targets_);
}

std::unique_ptr<KnnModel> KnnModel::ReadState(ModelConfig config, Task task,
                                              std::size_t n_features, std::size_t n_classes,
                                              std::istream& in) {
  Standardizer standardizer = Standardizer::Read(in);
  serial::Expect(in, "points");
  const std::size_t rows = serial::ReadCount(in);
  const std::size_t cols = serial::ReadCount(in);
  Matrix points(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    serial::Expect(in, "row");
    const auto values = serial::ReadNumbers(in);
    if (values.size() != cols) throw ValidationError("model file: bad knn row");
    std::copy(values.begin(), values.end(), points.row(r).begin());
  }
  std::vector<double> targets = serial::ReadKeyed(in, "targets");
  return std::make_unique<KnnModel>(std::move(config), task, n_features, n_classes,
                                    std::move(standardizer), std::move(points),
                                    std::move(targets));
}

}  // namespace attrib
