#include <algorithm>

#include "attrib/error.h"
#include "attrib/model.h"
#include "attrib/models/families.h"
#include "attrib/text.h"

namespace attrib {
namespace {

struct FamilyInfo {
  Family family;
  std::string_view id;
};

constexpr FamilyInfo kFamilyIds[] = {
    {Family::kDecisionTree, "dt"}, {Family::kRandomForest, "rf"},
    {Family::kGradientBoosting, "gbt"}, {Family::kKnn, "knn"},
    {Family::kLogReg, "logreg"}, {Family::kMlp, "mlp"},
};

}  // namespace

std::string_view FamilyId(Family family) {
  for (const auto& info : kFamilyIds) {
    if (info.family == family) return info.id;
  }
  return "unknown";
}

Family ParseFamily(std::string_view name) {
  const std::string lower = ToLower(Trim(name));
  for (const auto& info : kFamilyIds) {
    if (info.id == lower) return info.family;
  }
  throw ValidationError("unknown model family '" + std::string(name) +
                        "' (expected dt, rf, gbt, knn, logreg or mlp)");
}

double ModelConfig::Get(const std::string& name, double fallback) const {
  const auto it = params.find(name);
  return it == params.end() ? fallback : it->second;
}

const Hyperparameters& DefaultHyperparameters(Family family) {
  static const Hyperparameters dt = {
      {"max_depth", 0}, {"min_samples_split", 2}, {"min_samples_leaf", 1},
      {"max_features", 0}};
  // max_features 0 means sqrt(n) for classification and n/3 for regression.
  static const Hyperparameters rf = {
      {"n_trees", 100},       {"max_depth", 0},    {"min_samples_split", 2},
      {"min_samples_leaf", 1}, {"max_features", 0}, {"bootstrap", 1}};
  static const Hyperparameters gbt = {
      {"n_trees", 100}, {"learning_rate", 0.1}, {"max_depth", 3}, {"min_samples_leaf", 1}};
  static const Hyperparameters knn = {{"k", 5}};
  static const Hyperparameters logreg = {{"l2", 1e-4}, {"max_iter", 100}};
  static const Hyperparameters mlp = {{"hidden", 16},  {"hidden2", 0},
                                      {"learning_rate", 0.01}, {"epochs", 300},
                                      {"l2", 1e-4}};
  switch (family) {
    case Family::kDecisionTree: return dt;
    case Family::kRandomForest: return rf;
    case Family::kGradientBoosting: return gbt;
    case Family::kKnn: return knn;
    case Family::kLogReg: return logreg;
    case Family::kMlp: return mlp;
  }
  throw Error("unknown family");
}

void ValidateConfig(const ModelConfig& config) {
  const auto& defaults = DefaultHyperparameters(config.family);
  for (const auto& [name, value] : config.params) {
    if (!defaults.contains(name)) {
      throw ValidationError("hyperparameter '" + name + "' is not valid for " +
                            std::string(FamilyId(config.family)));
    }
  }
}

Model::Model(ModelConfig config, Task task, std::size_t n_features, std::size_t n_classes)
    : config_(std::move(config)), task_(task), n_features_(n_features),
      n_classes_(task == Task::kRegression ? 0 : n_classes) {}

void Model::CheckInput(std::size_t cols) const {
  if (cols != n_features_) {
    throw ValidationError("model expects " + std::to_string(n_features_) +
                          " features, got " + std::to_string(cols));
  }
}

std::vector<double> Model::Predict(const Matrix& x) const {
  if (x.rows() == 0) return {};
  CheckInput(x.cols());
  if (task_ == Task::kRegression) return Regress(x);
  const Matrix proba = Probabilities(x);
  std::vector<double> labels(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = proba.row(r);
    labels[r] = static_cast<double>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return labels;
}

Matrix Model::PredictProba(const Matrix& x) const {
  if (task_ != Task::kClassification) {
    throw ValidationError("predict_proba called on a regression model");
  }
  if (x.rows() == 0) return Matrix(0, n_classes_);
  CheckInput(x.cols());
  return Probabilities(x);
}

std::vector<double> Model::Response(const Matrix& x) const {
  if (x.rows() == 0) return {};
  CheckInput(x.cols());
  if (task_ == Task::kRegression) return Regress(x);
  const Matrix proba = Probabilities(x);
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = proba.row(r);
    out[r] = n_classes_ == 2 ? row[1] : *std::max_element(row.begin(), row.end());
  }
  return out;
}

double Model::Response(std::span<const double> x) const {
  Matrix one(1, x.size(), std::vector<double>(x.begin(), x.end()));
  return Response(one)[0];
}

std::vector<double> Model::Gradient(std::span<const double> x) const {
  if (!differentiable()) {
    throw ValidationError("model family '" + std::string(FamilyId(family())) +
                          "' is not differentiable");
  }
  CheckInput(x.size());
  return ResponseGradient(x);
}

Matrix Model::Probabilities(const Matrix&) const {
  throw Error("model does not produce probabilities");
}

std::vector<double> Model::Regress(const Matrix&) const {
  throw Error("model does not support regression");
}

std::vector<double> Model::ResponseGradient(std::span<const double>) const {
  throw ValidationError("model is not differentiable");
}

ModelPtr Fit(const ModelConfig& config, const Dataset& train) {
  ValidateConfig(config);
  train.Validate();
  if (train.n_samples() == 0) throw ValidationError("cannot fit on an empty dataset");
  if (train.task == Task::kClassification && train.n_classes() < 2) {
    throw ValidationError("classification needs at least two class labels");
  }
  switch (config.family) {
    case Family::kDecisionTree: return DecisionTreeModel::Train(config, train);
    case Family::kRandomForest: return RandomForestModel::Train(config, train);
    case Family::kGradientBoosting: return GradientBoostingModel::Train(config, train);
    case Family::kKnn: return KnnModel::Train(config, train);
    case Family::kLogReg: return LogisticModel::Train(config, train);
    case Family::kMlp: return MlpModel::Train(config, train);
  }
  throw Error("unknown family");
}

std::vector<SplitPoint> CollectSplits(const Model& model) {
  std::vector<SplitPoint> out;
  const auto add = [&](const Tree& tree) {
    for (const auto& node : tree.nodes()) {
      if (!node.leaf()) out.push_back({static_cast<std::size_t>(node.feature), node.threshold});
    }
  };
  if (const auto* dt = dynamic_cast<const DecisionTreeModel*>(&model)) {
    add(dt->tree());
  } else if (const auto* rf = dynamic_cast<const RandomForestModel*>(&model)) {
    for (const auto& tree : rf->trees()) add(tree);
  } else if (const auto* gbt = dynamic_cast<const GradientBoostingModel*>(&model)) {
    for (const auto& round : gbt->rounds()) {
      for (const auto& tree : round) add(tree);
    }
  }
  return out;
}

}  // namespace attrib
