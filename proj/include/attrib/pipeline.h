#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "attrib/consensus.h"
#include "attrib/data.h"
#include "attrib/error.h"
#include "attrib/explain.h"
#include "attrib/metrics.h"
#include "attrib/model.h"

namespace attrib {

enum class Method { kPermutation, kLime, kShap, kIg, kCounterfactual, kPdp, kAle };

inline constexpr Method kAllMethods[] = {Method::kPermutation,    Method::kLime,
                                         Method::kShap,           Method::kIg,
                                         Method::kCounterfactual, Method::kPdp,
                                         Method::kAle};

// "permutation", "lime", "shap", "ig", "counterfactual", "pdp", "ale".
std::string_view MethodId(Method method);
Method ParseMethod(std::string_view name);

// Which test samples local methods explain: "all", "first:N" or "ids:3,8,21"
// (ids are row numbers of the input dataset).
struct SampleSelector {
  enum class Kind { kAll, kFirst, kIds };
  Kind kind = Kind::kAll;
  std::size_t first = 0;
  std::vector<std::size_t> ids;

  static SampleSelector Parse(std::string_view text);
  std::string ToString() const;
  // Positions into `available` (sorted dataset row ids) that are selected.
  std::vector<std::size_t> Resolve(const std::vector<std::size_t>& available) const;
};

struct MethodParams {
  int permutation_repeats = 5;
  std::size_t shap_budget = 2048;
  std::size_t shap_background = 20;
  int lime_perturbations = 1000;
  int lime_rules = 10;
  int ig_steps = 64;
  int counterfactuals = 4;
  int counterfactual_budget = 2000;
  int pdp_grid = 20;
  int ale_bins = 10;
  // Curves and plots are written for this many top-ranked features.
  std::size_t curve_features = 10;
};

struct RunConfig {
  // Exactly one input: a CSV file or a synthetic rule specification.
  std::filesystem::path dataset;
  std::optional<RuleSpec> rules;
  std::size_t synthetic_samples = 0;

  std::string target = "class";
  Task task = Task::kClassification;
  double test_fraction = 0.2;
  std::vector<Family> families;
  // Overrides of the default grid per family.
  std::map<Family, ParamGrid> grids;
  std::vector<Method> methods;
  SampleSelector explain;
  std::uint64_t seed = 0;
  int workers = 1;
  double cutoff = kDefaultCutoff;
  int k_folds = 5;
  std::filesystem::path outdir;
  bool plots = true;
  MethodParams params;

  // Throws ValidationError for any inconsistent setting.
  void Validate() const;
};

// Every field with defaults resolved. Excludes `workers` and `outdir`,
// which do not influence results.
std::string ConfigToJson(const RunConfig& config);
// Inverse of ConfigToJson; `workers` and `outdir` keep their defaults.
RunConfig ConfigFromJson(const std::string& text);

// Pure function of (seed, model id, method id).
std::uint64_t TaskSeed(std::uint64_t seed, std::string_view model, std::string_view method);

// --- Scheduler ------------------------------------------------------------

struct TaskTiming {
  bool ok = true;
  std::string error;
  double start = 0.0;  // seconds since the schedule began
  double seconds = 0.0;
};

// Runs fn(i) for every task with at most `workers` in flight. Exceptions
// are captured per task; other tasks proceed.
std::vector<TaskTiming> Schedule(std::size_t n_tasks, int workers,
                                 const std::function<void(std::size_t)>& fn);

// --- Run ------------------------------------------------------------------

// Raised when a pipeline stage cannot complete; names the stage.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& message)
      : Error("stage '" + stage + "' failed: " + message), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PreparedData {
  Dataset full;  // after encoding
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_ids;  // dataset row numbers
  std::vector<std::size_t> test_ids;
};

struct TrainedModel {
  std::string id;
  ModelConfig config;
  ModelPtr model;
  double cv_score = 0.0;
  MetricsReport test_metrics;
  // AUC (classification) or R² (regression) on the test set; NaN if undefined.
  double score = 0.0;
  std::vector<double> predictions;
  std::vector<double> responses;
};

enum class TaskStatus { kOk, kFailed, kNotApplicable };
std::string_view TaskStatusName(TaskStatus status);

struct TaskResult {
  std::string model;
  Method method = Method::kPermutation;
  std::uint64_t seed = 0;
  TaskStatus status = TaskStatus::kOk;
  std::string error;
  AttributionVector global;
  std::optional<AttributionMatrix> local;
  std::vector<LocalExplanation> lime;
  std::vector<Curve> curves;  // pdp / ice pairs or ale, top features only
  // Counterfactual points: (sample id, point) in search order per sample.
  std::vector<std::pair<std::size_t, std::vector<double>>> counterfactual_points;
  std::vector<std::size_t> counterfactual_exhausted;
};

// Loads or synthesizes, one-hot encodes categorical features and splits.
PreparedData PrepareData(const RunConfig& config);

// Runs one explanation task. Never throws for method failures; those land
// in the result's status.
TaskResult ExecuteTask(const RunConfig& config, const PreparedData& data,
                       const TrainedModel& model, Method method);

// Artifact name -> path relative to the output directory.
using ArtifactMap = std::map<std::string, std::string>;

// Writes the CSVs and plots of one task below `outdir`.
void WriteTaskArtifacts(const RunConfig& config, const PreparedData& data,
                        const TaskResult& task, const std::filesystem::path& outdir,
                        ArtifactMap& artifacts);

struct RunResult {
  int exit_code = 0;  // 0 success, 3 some tasks failed
  PreparedData data;
  std::vector<TrainedModel> models;
  // Families that failed to train, with the reason.
  std::vector<std::pair<std::string, std::string>> failed_models;
  std::vector<TaskResult> tasks;
  std::vector<TaskTiming> task_timings;
  std::vector<ConsensusReport> consensus;
  std::vector<std::pair<std::string, std::string>> skipped_consensus;
  ArtifactMap artifacts;
  std::vector<std::pair<std::string, double>> stage_seconds;
};

// Runs every stage and writes all artifacts plus manifest.json. Throws
// ValidationError for bad configuration and StageError for stage failures.
RunResult Run(const RunConfig& config);

// Writes one "attrib explain" command line per (model, method) task after
// training, instead of running explanations in process.
std::vector<std::string> EmitTaskCommands(const RunConfig& config,
                                          const std::string& executable);

// Runs a single task for a run directory prepared by EmitTaskCommands.
TaskResult ExplainFromRunDir(const std::filesystem::path& run_dir,
                             const std::string& model_id, Method method);

}  // namespace attrib
