#include <cmath>
#include <istream>
#include <ostream>

#include "attrib/error.h"
#include "attrib/models/families.h"
#include "serial.h"
#include "tree_params.h"

namespace attrib {

RandomForestModel::RandomForestModel(ModelConfig config, Task task,
                                     std::size_t n_features, std::size_t n_classes,
                                     std::vector<Tree> trees)
    : Model(std::move(config), task, n_features, n_classes), trees_(std::move(trees)) {
  if (trees_.empty()) throw ValidationError("random forest needs at least one tree");
}

std::unique_ptr<RandomForestModel> RandomForestModel::Train(const ModelConfig& config,
                                                            const Dataset& train) {
  TreeParams params = TreeParamsFrom(config, 0);
  const auto n_features = static_cast<double>(train.n_features());
  if (params.max_features == 0) {
    params.max_features = train.task == Task::kClassification
                              ? static_cast<int>(std::max(1.0, std::floor(std::sqrt(n_features))))
                              : static_cast<int>(std::max(1.0, std::floor(n_features / 3.0)));
  }
  const auto n_trees = static_cast<std::size_t>(config.Get("n_trees", 100));
  if (n_trees == 0) throw ValidationError("n_trees must be positive");
  const bool bootstrap = config.Get("bootstrap", 1) != 0.0;
  const std::size_t n = train.n_samples();

  std::vector<Tree> trees;
  trees.reserve(n_trees);
  for (std::size_t t = 0; t < n_trees; ++t) {
    // Tree t splits with the same stream a DecisionTreeModel uses for t = 0.
    Rng split_rng(DeriveSeed(config.seed, t));
    std::vector<std::size_t> rows = AllRows(n);
    if (bootstrap) {
      Rng sample_rng(DeriveSeed(config.seed ^ 0x5eedb007ULL, t));
      for (auto& r : rows) r = sample_rng.Index(n);
      std::sort(rows.begin(), rows.end());
    }
    trees.push_back(train.task == Task::kClassification
                        ? GrowClassificationTree(train.features, train.target,
                                                 train.n_classes(), std::move(rows),
                                                 params, split_rng)
                        : GrowRegressionTree(train.features, train.target,
                                             std::move(rows), params, split_rng));
  }
  return std::make_unique<RandomForestModel>(config, train.task, train.n_features(),
                                             train.n_classes(), std::move(trees));
}

Matrix RandomForestModel::Probabilities(const Matrix& x) const {
  Matrix out(x.rows(), n_classes());
  const double scale = 1.0 / static_cast<double>(trees_.size());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = out.row(r);
    for (const auto& tree : trees_) AddLeaf(row, tree.Evaluate(x.row(r)));
    for (double& p : row) p *= scale;
  }
  return out;
}

std::vector<double> RandomForestModel::Regress(const Matrix& x) const {
  std::vector<double> out(x.rows(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (const auto& tree : trees_) out[r] += tree.Evaluate(x.row(r))[0];
    out[r] /= static_cast<double>(trees_.size());
  }
  return out;
}

void RandomForestModel::WriteState(std::ostream& out) const {
  out << "trees " << trees_.size() << '\n';
  for (const auto& tree : trees_) tree.Write(out);
}

std::unique_ptr<RandomForestModel> RandomForestModel::ReadState(
    ModelConfig config, Task task, std::size_t n_features, std::size_t n_classes,
    std::istream& in) {
  serial::Expect(in, "trees");
  const std::size_t n = serial::ReadCount(in);
  std::vector<Tree> trees;
  for (std::size_t t = 0; t < n; ++t) trees.push_back(Tree::Read(in));
  return std::make_unique<RandomForestModel>(std::move(config), task, n_features,
                                             n_classes, std::move(trees));
}

}  // namespace attrib
