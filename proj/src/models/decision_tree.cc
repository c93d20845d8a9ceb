#include <istream>
#include <ostream>

#include "attrib/error.h"
#include "attrib/models/families.h"
#include "tree_params.h"

namespace attrib {

DecisionTreeModel::DecisionTreeModel(ModelConfig config, Task task,
                                     std::size_t n_features, std::size_t n_classes,
                                     Tree tree)
    : Model(std::move(config), task, n_features, n_classes), tree_(std::move(tree)) {}

std::unique_ptr<DecisionTreeModel> DecisionTreeModel::Train(const ModelConfig& config,
                                                            const Dataset& train) {
  const TreeParams params = TreeParamsFrom(config, 0);
  Rng rng(DeriveSeed(config.seed, 0));
  Tree tree = train.task == Task::kClassification
                  ? GrowClassificationTree(train.features, train.target,
                                           train.n_classes(), AllRows(train.n_samples()),
                                           params, rng)
                  : GrowRegressionTree(train.features, train.target,
                                       AllRows(train.n_samples()), params, rng);
  return std::make_unique<DecisionTreeModel>(config, train.task, train.n_features(),
                                             train.n_classes(), std::move(tree));
}

Matrix DecisionTreeModel::Probabilities(const Matrix& x) const {
  Matrix out(x.rows(), n_classes());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto& leaf = tree_.Evaluate(x.row(r));
    std::copy(leaf.begin(), leaf.end(), out.row(r).begin());
  }
  return out;
}

std::vector<double> DecisionTreeModel::Regress(const Matrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = tree_.Evaluate(x.row(r))[0];
  return out;
}

void DecisionTreeModel::WriteState(std::ostream& out) const { tree_.Write(out); }

std::unique_ptr<DecisionTreeModel> DecisionTreeModel::ReadState(
    ModelConfig config, Task task, std::size_t n_features, std::size_t n_classes,
    std::istream& in) {
  return std::make_unique<DecisionTreeModel>(std::move(config), task, n_features,
                                             n_classes, Tree::Read(in));
}

}  // namespace attrib
