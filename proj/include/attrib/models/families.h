#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "attrib/model.h"
#include "attrib/models/tree.h"

namespace attrib {

// Per-column affine map to zero mean and unit variance. Constant columns
// keep scale 1.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer Fit(const Matrix& x);
  static Standardizer Identity(std::size_t n_features);
  Matrix Apply(const Matrix& x) const;
  void Write(std::ostream& out) const;
  static Standardizer Read(std::istream& in);
};

class DecisionTreeModel final : public Model {
 public:
  DecisionTreeModel(ModelConfig config, Task task, std::size_t n_features,
                    std::size_t n_classes, Tree tree);
  static std::unique_ptr<DecisionTreeModel> Train(const ModelConfig& config,
                                                  const Dataset& train);
  static std::unique_ptr<DecisionTreeModel> ReadState(ModelConfig config, Task task,
                                                      std::size_t n_features,
                                                      std::size_t n_classes,
                                                      std::istream& in);
  const Tree& tree() const { return tree_; }
  void WriteState(std::ostream& out) const override;

 protected:
  Matrix Probabilities(const Matrix& x) const override;
  std::vector<double> Regress(const Matrix& x) const override;

 private:
  Tree tree_;
};

class RandomForestModel final : public Model {
 public:
  RandomForestModel(ModelConfig config, Task task, std::size_t n_features,
                    std::size_t n_classes, std::vector<Tree> trees);
  static std::unique_ptr<RandomForestModel> Train(const ModelConfig& config,
                                                  const Dataset& train);
  static std::unique_ptr<RandomForestModel> ReadState(ModelConfig config, Task task,
                                                      std::size_t n_features,
                                                      std::size_t n_classes,
                                                      std::istream& in);
  const std::vector<Tree>& trees() const { return trees_; }
  void WriteState(std::ostream& out) const override;

 protected:
  Matrix Probabilities(const Matrix& x) const override;
  std::vector<double> Regress(const Matrix& x) const override;

 private:
  std::vector<Tree> trees_;
};

// Gradient boosting with Newton leaf values. Binary classification and
// regression use one tree per round; K-class problems use K softmax trees.
class GradientBoostingModel final : public Model {
 public:
  GradientBoostingModel(ModelConfig config, Task task, std::size_t n_features,
                        std::size_t n_classes, std::vector<double> base_score,
                        double learning_rate, std::vector<std::vector<Tree>> rounds);
  static std::unique_ptr<GradientBoostingModel> Train(const ModelConfig& config,
                                                      const Dataset& train);
  static std::unique_ptr<GradientBoostingModel> ReadState(ModelConfig config, Task task,
                                                          std::size_t n_features,
                                                          std::size_t n_classes,
                                                          std::istream& in);
  const std::vector<std::vector<Tree>>& rounds() const { return rounds_; }
  const std::vector<double>& base_score() const { return base_score_; }
  void WriteState(std::ostream& out) const override;

 protected:
  Matrix Probabilities(const Matrix& x) const override;
  std::vector<double> Regress(const Matrix& x) const override;

 private:
  // Raw additive scores, one column per output.
  Matrix Margins(const Matrix& x) const;

  std::vector<double> base_score_;
  double learning_rate_;
  std::vector<std::vector<Tree>> rounds_;
};

// k nearest neighbours by Euclidean distance on standardized features.
// Equal distances resolve to the lower training index.
class KnnModel final : public Model {
 public:
  KnnModel(ModelConfig config, Task task, std::size_t n_features, std::size_t n_classes,
           Standardizer standardizer, Matrix points, std::vector<double> targets);
  static std::unique_ptr<KnnModel> Train(const ModelConfig& config, const Dataset& train);
  static std::unique_ptr<KnnModel> ReadState(ModelConfig config, Task task,
                                             std::size_t n_features,
                                             std::size_t n_classes, std::istream& in);
  void WriteState(std::ostream& out) const override;

 protected:
  Matrix Probabilities(const Matrix& x) const override;
  std::vector<double> Regress(const Matrix& x) const override;

 private:
  // Indices of the k nearest training points of a standardized query.
  void Neighbours(std::span<const double> query, std::vector<std::size_t>& out,
                  std::vector<std::pair<double, std::size_t>>& scratch) const;

  std::size_t k_;
  Standardizer standardizer_;
  Matrix points_;
  std::vector<double> targets_;
};

// L2-regularised logistic regression on standardized inputs (one-vs-rest
// beyond two classes) or ridge regression for regression tasks.
class LogisticModel final : public Model {
 public:
  // `weights[o]` holds n_features coefficients in standardized space for
  // output o; binary and regression models have one output.
  LogisticModel(ModelConfig config, Task task, std::size_t n_features,
                std::size_t n_classes, Standardizer standardizer,
                std::vector<std::vector<double>> weights, std::vector<double> bias);
  static std::unique_ptr<LogisticModel> Train(const ModelConfig& config,
                                              const Dataset& train);
  static std::unique_ptr<LogisticModel> ReadState(ModelConfig config, Task task,
                                                  std::size_t n_features,
                                                  std::size_t n_classes, std::istream& in);
  bool differentiable() const override { return true; }
  void WriteState(std::ostream& out) const override;

  // Coefficients mapped back to raw input units.
  std::vector<double> RawWeights(std::size_t output = 0) const;

 protected:
  Matrix Probabilities(const Matrix& x) const override;
  std::vector<double> Regress(const Matrix& x) const override;
  std::vector<double> ResponseGradient(std::span<const double> x) const override;

 private:
  double Linear(std::span<const double> z, std::size_t output) const;

  Standardizer standardizer_;
  std::vector<std::vector<double>> weights_;
  std::vector<double> bias_;
};

// Fully connected ReLU network with a softmax (classification) or identity
// (regression) head, trained full-batch with Adam on standardized inputs.
class MlpModel final : public Model {
 public:
  struct Layer {
    Matrix weights;  // inputs x outputs
    std::vector<double> bias;
  };

  MlpModel(ModelConfig config, Task task, std::size_t n_features, std::size_t n_classes,
           Standardizer standardizer, std::vector<Layer> layers, double target_mean,
           double target_scale);
  static std::unique_ptr<MlpModel> Train(const ModelConfig& config, const Dataset& train);
  static std::unique_ptr<MlpModel> ReadState(ModelConfig config, Task task,
                                             std::size_t n_features,
                                             std::size_t n_classes, std::istream& in);
  bool differentiable() const override { return true; }
  void WriteState(std::ostream& out) const override;

  const std::vector<Layer>& layers() const { return layers_; }

 protected:
  Matrix Probabilities(const Matrix& x) const override;
  std::vector<double> Regress(const Matrix& x) const override;
  std::vector<double> ResponseGradient(std::span<const double> x) const override;

 private:
  Matrix Forward(const Matrix& x) const;

  Standardizer standardizer_;
  std::vector<Layer> layers_;
  double target_mean_;
  double target_scale_;
};

}  // namespace attrib
