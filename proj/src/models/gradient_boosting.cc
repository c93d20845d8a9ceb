#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "attrib/error.h"
#include "attrib/models/families.h"
#include "serial.h"
#include "tree_params.h"

namespace attrib {
namespace {

constexpr double kMinHessian = 1e-12;
constexpr double kProbClip = 1e-12;

double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void Softmax(std::span<double> row) {
  const double top = *std::max_element(row.begin(), row.end());
  double sum = 0.0;
  for (double& v : row) sum += (v = std::exp(v - top));
  for (double& v : row) v /= sum;
}

}  // namespace

GradientBoostingModel::GradientBoostingModel(ModelConfig config, Task task,
                                             std::size_t n_features, std::size_t n_classes,
                                             std::vector<double> base_score,
                                             double learning_rate,
                                             std::vector<std::vector<Tree>> rounds)
    : Model(std::move(config), task, n_features, n_classes),
      base_score_(std::move(base_score)),
      learning_rate_(learning_rate),
      rounds_(std::move(rounds)) {}

std::unique_ptr<GradientBoostingModel> GradientBoostingModel::Train(
    const ModelConfig& config, const Dataset& train) {
  const TreeParams params = TreeParamsFrom(config, 3);
  const auto n_rounds = static_cast<std::size_t>(config.Get("n_trees", 100));
  const double rate = config.Get("learning_rate", 0.1);
  if (rate < 0) throw ValidationError("learning_rate must be non-negative");
  const std::size_t n = train.n_samples();
  const bool classification = train.task == Task::kClassification;
  const std::size_t k = classification ? train.n_classes() : 1;
  const std::size_t n_outputs = classification && k > 2 ? k : 1;

  // Base scores: prior log-odds, per-class log priors or the target mean.
  std::vector<double> base(n_outputs, 0.0);
  if (!classification) {
    base[0] = std::accumulate(train.target.begin(), train.target.end(), 0.0) /
              static_cast<double>(n);
  } else {
    std::vector<double> counts(k, 0.0);
    for (double y : train.target) counts[static_cast<std::size_t>(y)] += 1.0;
    if (n_outputs == 1) {
      const double p = std::clamp(counts[1] / static_cast<double>(n), kProbClip, 1 - kProbClip);
      base[0] = std::log(p / (1.0 - p));
    } else {
      for (std::size_t c = 0; c < k; ++c) {
        base[c] = std::log(std::max(counts[c] / static_cast<double>(n), kProbClip));
      }
    }
  }

  Matrix margin(n, n_outputs);
  for (std::size_t r = 0; r < n; ++r) {
    std::copy(base.begin(), base.end(), margin.row(r).begin());
  }
  std::vector<double> gradient(n), hessian(n);
  std::vector<std::vector<Tree>> rounds;
  rounds.reserve(n_rounds);
  Rng rng(DeriveSeed(config.seed, 0));

  for (std::size_t round = 0; round < n_rounds; ++round) {
    Matrix proba = margin;
    if (classification && n_outputs == 1) {
      for (double& v : proba.data()) v = Sigmoid(v);
    } else if (classification) {
      for (std::size_t r = 0; r < n; ++r) Softmax(proba.row(r));
    }
    std::vector<Tree> trees;
    for (std::size_t o = 0; o < n_outputs; ++o) {
      // Negative gradient of the loss with respect to the margin.
      for (std::size_t r = 0; r < n; ++r) {
        const double y = train.target[r];
        if (!classification) {
          gradient[r] = y - margin(r, 0);
          hessian[r] = 1.0;
        } else {
          const double target = n_outputs == 1 ? y : (static_cast<std::size_t>(y) == o ? 1.0 : 0.0);
          const double p = proba(r, o);
          gradient[r] = target - p;
          hessian[r] = p * (1.0 - p);
        }
      }
      const double scale =
          n_outputs > 1 ? static_cast<double>(k - 1) / static_cast<double>(k) : 1.0;
      LeafFn leaf = [&](std::span<const std::size_t> rows) {
        double g = 0.0, h = 0.0;
        for (std::size_t r : rows) {
          g += gradient[r];
          h += hessian[r];
        }
        return std::vector<double>{scale * g / std::max(h, kMinHessian)};
      };
      Tree tree = GrowRegressionTree(train.features, gradient, AllRows(n), params, rng, leaf);
      for (std::size_t r = 0; r < n; ++r) {
        margin(r, o) += rate * tree.Evaluate(train.features.row(r))[0];
      }
      trees.push_back(std::move(tree));
    }
    rounds.push_back(std::move(trees));
  }
  return std::make_unique<GradientBoostingModel>(config, train.task, train.n_features(),
                                                 train.n_classes(), std::move(base), rate,
                                                 std::move(rounds));
}

Matrix GradientBoostingModel::Margins(const Matrix& x) const {
  const std::size_t n_outputs = base_score_.size();
  Matrix out(x.rows(), n_outputs);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = out.row(r);
    std::copy(base_score_.begin(), base_score_.end(), row.begin());
    if (learning_rate_ == 0.0) continue;
    for (const auto& round : rounds_) {
      for (std::size_t o = 0; o < n_outputs; ++o) {
        row[o] += learning_rate_ * round[o].Evaluate(x.row(r))[0];
      }
    }
  }
  return out;
}

Matrix GradientBoostingModel::Probabilities(const Matrix& x) const {
  const Matrix margin = Margins(x);
  Matrix out(x.rows(), n_classes());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (base_score_.size() == 1) {
      const double p = Sigmoid(margin(r, 0));
      out(r, 0) = 1.0 - p;
      out(r, 1) = p;
    } else {
      auto row = out.row(r);
      std::copy(margin.row(r).begin(), margin.row(r).end(), row.begin());
      Softmax(row);
    }
  }
  return out;
}

std::vector<double> GradientBoostingModel::Regress(const Matrix& x) const {
  return Margins(x).column(0);
}

void GradientBoostingModel::WriteState(std::ostream& out) const {
  serial::WriteKeyed(out, "base_score", base_score_);
  out << "learning_rate " << FormatNumber(learning_rate_) << '\n';
  out << "rounds " << rounds_.size() << '\n';
  for (const auto& round : rounds_) {
    for (const auto& tree : round) tree.Write(out);
  }
}

std::unique_ptr<GradientBoostingModel> GradientBoostingModel::ReadState(
    ModelConfig config, Task task, std::size_t n_features, std::size_t n_classes,
    std::istream& in) {
  std::vector<double> base = serial::ReadKeyed(in, "base_score");
  if (base.empty()) throw ValidationError("model file: empty base score");
  serial::Expect(in, "learning_rate");
  const double rate = serial::ReadNumber(in);
  serial::Expect(in, "rounds");
  const std::size_t n_rounds = serial::ReadCount(in);
  std::vector<std::vector<Tree>> rounds(n_rounds);
  for (auto& round : rounds) {
    for (std::size_t o = 0; o < base.size(); ++o) round.push_back(Tree::Read(in));
  }
  return std::make_unique<GradientBoostingModel>(std::move(config), task, n_features,
                                                 n_classes, std::move(base), rate,
                                                 std::move(rounds));
}

}  // namespace attrib
