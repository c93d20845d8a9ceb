#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attrib/data.h"
#include "attrib/matrix.h"

namespace attrib {

enum class Family { kDecisionTree, kRandomForest, kGradientBoosting, kKnn, kLogReg, kMlp };

inline constexpr Family kAllFamilies[] = {
    Family::kDecisionTree, Family::kRandomForest, Family::kGradientBoosting,
    Family::kKnn,          Family::kLogReg,       Family::kMlp};

// Lower-case identifier used in file names and on the command line ("rf").
std::string_view FamilyId(Family family);
// Accepts identifiers case-insensitively.
Family ParseFamily(std::string_view name);

using Hyperparameters = std::map<std::string, double>;

struct ModelConfig {
  Family family = Family::kDecisionTree;
  Hyperparameters params;
  std::uint64_t seed = 0;

  double Get(const std::string& name, double fallback) const;
};

// Hyperparameter names accepted by a family, with their defaults.
const Hyperparameters& DefaultHyperparameters(Family family);
// Throws ValidationError on unknown hyperparameter names.
void ValidateConfig(const ModelConfig& config);

// A fitted model. Immutable after construction; every const method is safe
// to call concurrently.
//
// `Response` is the scalar every explainer works on: the class-1
// probability for binary classifiers, the predicted-class probability for
// multiclass classifiers and the raw prediction for regressors.
class Model {
 public:
  virtual ~Model() = default;

  const ModelConfig& config() const { return config_; }
  Family family() const { return config_.family; }
  Task task() const { return task_; }
  std::size_t n_features() const { return n_features_; }
  // 0 for regression.
  std::size_t n_classes() const { return n_classes_; }

  // Class indices (argmax, ties to the lower index) or regression values.
  std::vector<double> Predict(const Matrix& x) const;
  // Rows sum to one. Throws for regression models.
  Matrix PredictProba(const Matrix& x) const;
  std::vector<double> Response(const Matrix& x) const;
  double Response(std::span<const double> x) const;

  virtual bool differentiable() const { return false; }
  // Gradient of Response at x. Throws for non-differentiable families.
  std::vector<double> Gradient(std::span<const double> x) const;

  // Family-specific state, written after the common header by SaveModel.
  virtual void WriteState(std::ostream& out) const = 0;

 protected:
  Model(ModelConfig config, Task task, std::size_t n_features, std::size_t n_classes);

  virtual Matrix Probabilities(const Matrix& x) const;
  virtual std::vector<double> Regress(const Matrix& x) const;
  virtual std::vector<double> ResponseGradient(std::span<const double> x) const;

 private:
  void CheckInput(std::size_t cols) const;

  ModelConfig config_;
  Task task_;
  std::size_t n_features_;
  std::size_t n_classes_;
};

using ModelPtr = std::shared_ptr<const Model>;

// Trains a model. Deterministic in (config, train).
ModelPtr Fit(const ModelConfig& config, const Dataset& train);

// Versioned text serialization. Numbers are written in shortest
// round-trip form, so a reloaded model predicts bit-identically.
void SaveModel(const Model& model, std::ostream& out);
void SaveModel(const Model& model, const std::filesystem::path& path);
ModelPtr LoadModel(std::istream& in);
ModelPtr LoadModel(const std::filesystem::path& path);

// A split threshold found anywhere in a tree-based model.
struct SplitPoint {
  std::size_t feature;
  double threshold;
};
// All splits of DT, RF or GBT models; empty for other families.
std::vector<SplitPoint> CollectSplits(const Model& model);

// --- Grid search ----------------------------------------------------------

struct ParamGrid {
  Family family = Family::kDecisionTree;
  // Axis name -> candidate values. Expansion iterates axes in name order
  // with the last axis varying fastest.
  std::map<std::string, std::vector<double>> axes;

  std::vector<Hyperparameters> Expand() const;
};

ParamGrid DefaultGrid(Family family);

struct GridSearchResult {
  ModelConfig best;
  ModelPtr model;
  double best_score = 0.0;
  // Mean cross-validation score per grid point, in expansion order.
  std::vector<std::pair<Hyperparameters, double>> scores;
};

// k-fold cross-validation (stratified for classification) over every grid
// point; the best mean score wins, ties going to the earlier grid point.
// The winner is refit on the whole training set.
GridSearchResult GridSearch(const ParamGrid& grid, const Dataset& train, int k_folds,
                            std::string_view metric, std::uint64_t seed,
                            int workers = 1);

// Scores a fitted model on a dataset with the named metric.
double ScoreModel(const Model& model, const Dataset& data, std::string_view metric);

}  // namespace attrib
