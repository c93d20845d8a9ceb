#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "attrib/error.h"
#include "attrib/pipeline.h"
#include "attrib/report.h"
#include "attrib/rng.h"
#include "attrib/text.h"

namespace attrib {
namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr std::size_t kPlotIceLines = 50;

std::string SafeName(std::string_view text) {
  std::string out;
  for (char c : text) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.';
    out += keep ? c : '_';
  }
  return out;
}

std::string SelectionMetric(const Dataset& train) {
  if (train.task == Task::kClassification && train.n_classes() > 2) return "accuracy";
  return std::string(DefaultMetric(train.task));
}

class StageClock {
 public:
  explicit StageClock(std::vector<std::pair<std::string, double>>& sink, std::string name)
      : sink_(sink), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
  ~StageClock() {
    sink_.emplace_back(name_, std::chrono::duration<double>(
                                  std::chrono::steady_clock::now() - start_)
                                  .count());
  }

 private:
  std::vector<std::pair<std::string, double>>& sink_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

// Runs `body`, rethrowing anything but validation errors as a StageError.
template <typename Fn>
auto InStage(const std::string& stage, Fn&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

void Evaluate(const Dataset& test, TrainedModel& trained) {
  const Model& model = *trained.model;
  trained.predictions = model.Predict(test.features);
  trained.responses = model.Response(test.features);
  if (test.task == Task::kClassification) {
    const bool binary = test.n_classes() <= 2;
    trained.test_metrics =
        ClassificationReport(test.target, trained.predictions,
                             binary ? std::span<const double>(trained.responses)
                                    : std::span<const double>(),
                             std::max<std::size_t>(2, test.n_classes()));
    const std::string key = binary ? "auc" : "accuracy";
    trained.score = trained.test_metrics.undefined.count(key)
                        ? std::numeric_limits<double>::quiet_NaN()
                        : trained.test_metrics.at(key);
  } else {
    trained.test_metrics = RegressionReport(test.target, trained.predictions);
    trained.score = trained.test_metrics.undefined.count("r2")
                        ? std::numeric_limits<double>::quiet_NaN()
                        : trained.test_metrics.at("r2");
  }
}

std::vector<TrainedModel> TrainModels(const RunConfig& config, const PreparedData& data,
                                      std::vector<std::pair<std::string, std::string>>& failed) {
  const std::string metric = SelectionMetric(data.train);
  std::vector<TrainedModel> models;
  for (Family family : config.families) {
    const std::string id(FamilyId(family));
    const auto it = config.grids.find(family);
    const ParamGrid grid = it == config.grids.end() ? DefaultGrid(family) : it->second;
    try {
      auto search = GridSearch(grid, data.train, config.k_folds, metric,
                               TaskSeed(config.seed, id, "fit"), config.workers);
      TrainedModel trained;
      trained.id = id;
      trained.config = search.best;
      trained.model = search.model;
      trained.cv_score = search.best_score;
      Evaluate(data.test, trained);
      models.push_back(std::move(trained));
    } catch (const std::exception& e) {
      failed.emplace_back(id, e.what());
    }
  }
  if (models.empty()) throw StageError("train", "no model family could be trained");
  return models;
}

std::vector<double> ColumnMeans(const Matrix& m) {
  std::vector<double> means(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) means[c] += m(r, c);
  }
  for (double& v : means) v /= static_cast<double>(std::max<std::size_t>(1, m.rows()));
  return means;
}

bool IsConstant(const Matrix& m, std::size_t column) {
  for (std::size_t r = 1; r < m.rows(); ++r) {
    if (m(r, column) != m(0, column)) return false;
  }
  return true;
}

// Indices of the `k` largest values, descending, ties to the lower index.
std::vector<std::size_t> TopFeatures(const std::vector<double>& values, std::size_t k) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  if (order.size() > k) order.resize(k);
  return order;
}

AttributionMatrix NewMatrix(const TaskResult& task, const std::vector<std::string>& names,
                            std::size_t rows) {
  AttributionMatrix matrix;
  matrix.method = std::string(MethodId(task.method));
  matrix.model = task.model;
  matrix.features = names;
  matrix.values = Matrix(rows, names.size());
  return matrix;
}

void RunMethod(const RunConfig& config, const PreparedData& data, const TrainedModel& trained,
               TaskResult& task) {
  const Model& model = *trained.model;
  const Dataset& train = data.train;
  const Dataset& test = data.test;
  const auto names = train.feature_names();
  const auto& p = config.params;
  const auto positions = config.explain.Resolve(data.test_ids);
  auto sample_id = [&](std::size_t pos) { return data.test_ids[pos]; };

  auto finish_local = [&](AttributionMatrix matrix) {
    task.global = AggregateLocal(matrix);
    task.local = std::move(matrix);
  };
  auto require_samples = [&] {
    if (positions.empty()) throw ValidationError("no test samples selected for explanation");
  };

  switch (task.method) {
    case Method::kPermutation:
      task.global = PermutationImportance(model, test, SelectionMetric(train),
                                          p.permutation_repeats, task.seed);
      break;

    case Method::kLime: {
      require_samples();
      const auto edges = QuartileEdges(train.features);
      LimeOptions options;
      options.n_perturbations = p.lime_perturbations;
      options.n_rules = p.lime_rules;
      auto matrix = NewMatrix(task, names, positions.size());
      for (std::size_t i = 0; i < positions.size(); ++i) {
        const std::size_t id = sample_id(positions[i]);
        auto e = LimeExplain(model, test.features.row(positions[i]), train, edges, options,
                             DeriveSeed(task.seed, id), id);
        std::copy(e.attribution.begin(), e.attribution.end(), matrix.values.row(i).begin());
        matrix.sample_ids.push_back(id);
        task.lime.push_back(std::move(e));
      }
      finish_local(std::move(matrix));
      break;
    }

    case Method::kShap: {
      require_samples();
      std::vector<std::size_t> rows(train.n_samples());
      std::iota(rows.begin(), rows.end(), 0);
      Rng rng(DeriveSeed(task.seed, 0xbac6));
      rng.Shuffle(std::span<std::size_t>(rows));
      rows.resize(std::min(rows.size(), p.shap_background));
      std::sort(rows.begin(), rows.end());
      const Matrix background = train.features.SelectRows(rows);
      ShapOptions options;
      options.budget = p.shap_budget;
      auto matrix = NewMatrix(task, names, positions.size());
      for (std::size_t i = 0; i < positions.size(); ++i) {
        const std::size_t id = sample_id(positions[i]);
        const auto phi = KernelShap(model, test.features.row(positions[i]), background, options,
                                    DeriveSeed(task.seed, id));
        std::copy(phi.values.begin(), phi.values.end(), matrix.values.row(i).begin());
        matrix.sample_ids.push_back(id);
      }
      finish_local(std::move(matrix));
      break;
    }

    case Method::kIg: {
      if (!model.differentiable()) {
        task.status = TaskStatus::kNotApplicable;
        task.error = "model family is not differentiable";
        return;
      }
      require_samples();
      const auto baseline = ColumnMeans(train.features);
      auto matrix = NewMatrix(task, names, positions.size());
      for (std::size_t i = 0; i < positions.size(); ++i) {
        const auto ig = IntegratedGradients(model, test.features.row(positions[i]), baseline,
                                            p.ig_steps);
        std::copy(ig.attribution.values.begin(), ig.attribution.values.end(),
                  matrix.values.row(i).begin());
        matrix.sample_ids.push_back(sample_id(positions[i]));
      }
      finish_local(std::move(matrix));
      break;
    }

    case Method::kCounterfactual: {
      if (model.task() != Task::kClassification) {
        task.status = TaskStatus::kNotApplicable;
        task.error = "counterfactuals need a classifier";
        return;
      }
      require_samples();
      CounterfactualOptions options;
      options.n_counterfactuals = p.counterfactuals;
      options.budget = p.counterfactual_budget;
      auto matrix = NewMatrix(task, names, positions.size());
      for (std::size_t i = 0; i < positions.size(); ++i) {
        const std::size_t id = sample_id(positions[i]);
        const auto x = test.features.row(positions[i]);
        const auto predicted =
            static_cast<std::size_t>(model.Predict(Matrix(1, x.size(), {x.begin(), x.end()}))[0]);
        const std::size_t target =
            model.n_classes() == 2 ? 1 - predicted : (predicted + 1) % model.n_classes();
        const auto cf = Counterfactual(model, x, target, train.features, options,
                                       DeriveSeed(task.seed, id));
        const auto& freq = cf.change_frequency.values;
        std::copy(freq.begin(), freq.end(), matrix.values.row(i).begin());
        matrix.sample_ids.push_back(id);
        for (std::size_t r = 0; r < cf.counterfactuals.rows(); ++r) {
          const auto row = cf.counterfactuals.row(r);
          task.counterfactual_points.emplace_back(id, std::vector<double>(row.begin(), row.end()));
        }
        if (cf.exhausted) task.counterfactual_exhausted.push_back(id);
      }
      finish_local(std::move(matrix));
      break;
    }

    case Method::kPdp:
    case Method::kAle: {
      const bool pdp = task.method == Method::kPdp;
      task.global.values.assign(names.size(), 0.0);
      std::vector<std::vector<Curve>> curves(names.size());
      for (std::size_t j = 0; j < names.size(); ++j) {
        if (IsConstant(test.features, j)) continue;
        if (pdp) {
          auto [mean, ice] = PdpIce(model, test, j, p.pdp_grid);
          task.global.values[j] = PdpImportance(mean);
          for (auto& s : ice.sample_ids) s = data.test_ids[s];
          curves[j].push_back(std::move(mean));
          curves[j].push_back(std::move(ice));
        } else {
          auto ale = Ale(model, test, j, p.ale_bins);
          task.global.values[j] = AleImportance(ale);
          curves[j].push_back(std::move(ale));
        }
      }
      for (std::size_t j : TopFeatures(task.global.values, p.curve_features)) {
        for (auto& c : curves[j]) task.curves.push_back(std::move(c));
      }
      task.global.dispersion.assign(names.size(), 0.0);
      break;
    }
  }
  task.global.method = std::string(MethodId(task.method));
  task.global.model = task.model;
  task.global.features = names;
}

std::string CounterfactualCsv(const TaskResult& task, const std::vector<std::string>& names) {
  std::string out = "sample_id,rank";
  for (const auto& n : names) out += "," + n;
  out += "\n";
  std::size_t rank = 0, previous = static_cast<std::size_t>(-1);
  for (const auto& [id, point] : task.counterfactual_points) {
    rank = id == previous ? rank + 1 : 1;
    previous = id;
    out += std::to_string(id) + "," + std::to_string(rank);
    for (double v : point) out += "," + FormatNumber(v);
    out += "\n";
  }
  return out;
}

void Put(const fs::path& outdir, ArtifactMap& artifacts, const std::string& relative,
         const std::string& content) {
  WriteTextFile(outdir / relative, content);
  artifacts[fs::path(relative).filename().string()] = relative;
}

void PutPlot(const RunConfig& config, const fs::path& outdir, ArtifactMap& artifacts,
             const std::string& relative, const PlotSpec& spec) {
  if (!config.plots) return;
  Put(outdir, artifacts, relative, RenderSvg(spec));
}

PlotSpec CurvePlot(const Curve& mean, const Curve* ice, const std::string& title,
                   const std::string& y_label) {
  PlotSpec spec;
  spec.kind = ice ? PlotKind::kCurveFamily : PlotKind::kCurve;
  spec.title = title;
  spec.x_label = mean.name;
  spec.y_label = y_label;
  spec.series.push_back({"mean", mean.grid, mean.response});
  if (ice) {
    for (std::size_t s = 0; s < std::min(ice->ice.rows(), kPlotIceLines); ++s) {
      const auto row = ice->ice.row(s);
      spec.series.push_back({"ice", ice->grid, {row.begin(), row.end()}});
    }
  }
  return spec;
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct Prepared {
  PreparedData data;
  std::vector<TrainedModel> models;
  std::vector<std::pair<std::string, std::string>> failed_models;
};

Prepared PrepareAndTrain(const RunConfig& config,
                         std::vector<std::pair<std::string, double>>& stages) {
  config.Validate();
  Prepared p;
  {
    StageClock clock(stages, "load");
    p.data = InStage("load", [&] { return PrepareData(config); });
  }
  {
    StageClock clock(stages, "train");
    p.models = InStage("train", [&] { return TrainModels(config, p.data, p.failed_models); });
  }
  return p;
}

void WriteModelArtifacts(const RunConfig& config, const Prepared& p, ArtifactMap& artifacts) {
  const fs::path& out = config.outdir;
  std::ostringstream train_csv, test_csv;
  WriteCsv(p.data.train, train_csv);
  WriteCsv(p.data.test, test_csv);
  Put(out, artifacts, "data/train.csv", train_csv.str());
  Put(out, artifacts, "data/test.csv", test_csv.str());

  std::string scores = "model,cv_score,test_score,params\n";
  for (const auto& m : p.models) {
    std::ostringstream model_text;
    SaveModel(*m.model, model_text);
    Put(out, artifacts, "models/" + m.id + ".model", model_text.str());
    Put(out, artifacts, "metrics/" + m.id + "_metrics.csv", MetricsCsv(m.test_metrics));

    std::string pred = "sample_id,actual,predicted,response\n";
    for (std::size_t i = 0; i < m.predictions.size(); ++i) {
      pred += std::to_string(p.data.test_ids[i]) + "," + FormatNumber(p.data.test.target[i]) +
              "," + FormatNumber(m.predictions[i]) + "," + FormatNumber(m.responses[i]) + "\n";
    }
    Put(out, artifacts, "predictions/" + m.id + "_predictions.csv", pred);

    std::vector<std::string> params;
    for (const auto& [k, v] : m.config.params) params.push_back(k + "=" + FormatNumber(v));
    scores += m.id + "," + FormatNumber(m.cv_score) + "," + FormatNumber(m.score) + "," +
              Join(params, ";") + "\n";

    if (config.task == Task::kRegression) {
      PlotSpec spec;
      spec.kind = PlotKind::kScatter;
      spec.title = m.id + ": predicted vs actual";
      spec.x_label = "actual";
      spec.y_label = "predicted";
      spec.series.push_back({"test", p.data.test.target, m.predictions});
      PutPlot(config, out, artifacts, "plots/" + m.id + "_scatter.svg", spec);
    }
  }
  Put(out, artifacts, "model_scores.csv", scores);
  Put(out, artifacts, "config.json", ConfigToJson(config) + "\n");
}

}  // namespace

std::string_view TaskStatusName(TaskStatus status) {
  switch (status) {
    case TaskStatus::kOk: return "ok";
    case TaskStatus::kFailed: return "failed";
    case TaskStatus::kNotApplicable: return "not_applicable";
  }
  return "unknown";
}

PreparedData PrepareData(const RunConfig& config) {
  Dataset raw = config.rules
                    ? GenerateSynthetic(*config.rules, config.synthetic_samples, config.seed)
                    : LoadCsv(config.dataset, config.target, config.task);
  if (config.rules && config.task != Task::kClassification) {
    throw ValidationError("rule-labelled data is a classification task");
  }
  PreparedData data;
  data.full = OneHotEncode(raw, CategoricalColumns(raw));
  auto split = Split(data.full, config.test_fraction, DeriveSeed(config.seed, 1),
                     config.task == Task::kClassification);
  data.train = std::move(split.train);
  data.test = std::move(split.test);
  data.train_ids = std::move(split.train_indices);
  data.test_ids = std::move(split.test_indices);
  return data;
}

TaskResult ExecuteTask(const RunConfig& config, const PreparedData& data,
                       const TrainedModel& model, Method method) {
  TaskResult task;
  task.model = model.id;
  task.method = method;
  task.seed = TaskSeed(config.seed, model.id, MethodId(method));
  try {
    RunMethod(config, data, model, task);
  } catch (const std::exception& e) {
    task = TaskResult{model.id, method, task.seed, TaskStatus::kFailed, e.what()};
  }
  return task;
}

void WriteTaskArtifacts(const RunConfig& config, const PreparedData& data,
                        const TaskResult& task, const fs::path& outdir,
                        ArtifactMap& artifacts) {
  const std::string method(MethodId(task.method));
  const std::string base = task.model + "_" + method;
  if (task.status == TaskStatus::kNotApplicable) return;
  if (task.status == TaskStatus::kFailed) {
    Put(outdir, artifacts, "attributions/" + base + "_global.csv", FailedCsv(task.error));
    return;
  }
  Put(outdir, artifacts, "attributions/" + base + "_global.csv", GlobalCsv(task.global));
  PutPlot(config, outdir, artifacts, "plots/" + base + "_global.svg",
          AttributionBarPlot(task.global, 10, task.model + ": " + method));
  if (task.local) {
    Put(outdir, artifacts, "attributions/" + base + "_attribution.csv",
        AttributionCsv(*task.local));
  }
  if (!task.lime.empty()) {
    Put(outdir, artifacts, "rules/" + base + "_rules.csv", RulesCsv(task.lime));
    const auto& first = task.lime.front();
    PutPlot(config, outdir, artifacts,
            "plots/" + base + "_rules_" + std::to_string(first.sample_id) + ".svg",
            RulePanelPlot(first, task.model + ": LIME rules for sample " +
                                     std::to_string(first.sample_id)));
  }
  if (task.method == Method::kCounterfactual) {
    Put(outdir, artifacts, "counterfactuals/" + base + "_points.csv",
        CounterfactualCsv(task, data.train.feature_names()));
  }
  for (std::size_t i = 0; i < task.curves.size(); ++i) {
    const Curve& c = task.curves[i];
    const std::string feature = SafeName(c.name);
    if (task.method == Method::kPdp) {
      const bool ice = c.ice.rows() > 0;
      const std::string kind = ice ? "ice" : "pdp";
      Put(outdir, artifacts, "curves/" + task.model + "_" + kind + "_" + feature + ".csv",
          CurveCsv(c, ice));
      if (ice) {
        PutPlot(config, outdir, artifacts, "plots/" + task.model + "_pdp_" + feature + ".svg",
                CurvePlot(task.curves[i - 1], &c, task.model + ": PDP/ICE " + c.name,
                          "response"));
      }
    } else {
      Put(outdir, artifacts, "curves/" + task.model + "_ale_" + feature + ".csv",
          CurveCsv(c, false));
      PutPlot(config, outdir, artifacts, "plots/" + task.model + "_ale_" + feature + ".svg",
              CurvePlot(c, nullptr, task.model + ": ALE " + c.name, "accumulated effect"));
    }
  }
}

RunResult Run(const RunConfig& config) {
  RunResult result;
  Prepared prepared = PrepareAndTrain(config, result.stage_seconds);
  result.data = std::move(prepared.data);
  result.models = std::move(prepared.models);
  result.failed_models = std::move(prepared.failed_models);
  const auto& models = result.models;

  // One task per (model, method), model-major in configuration order.
  {
    StageClock clock(result.stage_seconds, "explain");
    const std::size_t n_methods = config.methods.size();
    result.tasks.resize(models.size() * n_methods);
    result.task_timings = Schedule(result.tasks.size(), config.workers, [&](std::size_t i) {
      result.tasks[i] = ExecuteTask(config, result.data, models[i / n_methods],
                                    config.methods[i % n_methods]);
      if (result.tasks[i].status == TaskStatus::kFailed) throw Error(result.tasks[i].error);
    });
  }

  {
    StageClock clock(result.stage_seconds, "consensus");
    ModelScores scores;
    for (const auto& m : models) scores[m.id] = m.score;
    for (Method method : config.methods) {
      const std::string id(MethodId(method));
      Contributions by_model;
      for (const auto& t : result.tasks) {
        if (t.method == method && t.status == TaskStatus::kOk) by_model.emplace(t.model, t.global);
      }
      if (by_model.empty()) continue;
      for (auto kind : {ConsensusKind::kAttributionByMethod, ConsensusKind::kRankByMethod}) {
        try {
          result.consensus.push_back(
              kind == ConsensusKind::kAttributionByMethod
                  ? ConsensusAttributionByMethod(id, by_model, scores, config.cutoff)
                  : ConsensusRankByMethod(id, by_model, scores, config.cutoff));
        } catch (const ValidationError& e) {
          result.skipped_consensus.emplace_back(
              std::string(ConsensusKindName(kind)) + "_" + id, e.what());
        }
      }
    }
    for (const auto& m : models) {
      Contributions by_method;
      for (const auto& t : result.tasks) {
        if (t.model == m.id && t.status == TaskStatus::kOk) {
          by_method.emplace(std::string(MethodId(t.method)), t.global);
        }
      }
      if (by_method.empty()) continue;
      result.consensus.push_back(ConsensusRankByModel(m.id, by_method));
    }
  }

  {
    StageClock clock(result.stage_seconds, "write");
    InStage("write", [&] {
      const fs::path& out = config.outdir;
      Prepared view{result.data, result.models, result.failed_models};
      WriteModelArtifacts(config, view, result.artifacts);
      for (const auto& task : result.tasks) {
        WriteTaskArtifacts(config, result.data, task, out, result.artifacts);
      }
      for (const auto& report : result.consensus) {
        const std::string stem = "consensus_" + std::string(ConsensusKindName(report.kind)) +
                                 "_" + report.subject;
        Put(out, result.artifacts, "consensus/" + stem + ".csv", ConsensusCsv(report));
        Put(out, result.artifacts, "consensus/" + stem + ".json", ConsensusSidecar(report));
        PutPlot(config, out, result.artifacts, "plots/" + stem + ".svg",
                ConsensusBarPlot(report, 10));
      }
      return 0;
    });
  }

  bool partial = !result.failed_models.empty();
  Json manifest;
  manifest["config"] = Json::parse(ConfigToJson(config));
  manifest["features"] = result.data.full.feature_names();
  manifest["class_labels"] = result.data.full.class_labels;
  Json model_list = Json::array();
  for (const auto& m : models) {
    Json entry;
    entry["id"] = m.id;
    Json params = Json::object();
    for (const auto& [k, v] : m.config.params) params[k] = v;
    entry["params"] = params;
    entry["seed"] = m.config.seed;
    entry["cv_score"] = m.cv_score;
    entry["test_score"] = std::isnan(m.score) ? Json(nullptr) : Json(m.score);
    Json metrics = Json::object();
    for (const auto& [k, v] : m.test_metrics.values) {
      metrics[k] = m.test_metrics.undefined.count(k) ? Json(nullptr) : Json(v);
    }
    entry["test_metrics"] = metrics;
    entry["passes_cutoff"] = !std::isnan(m.score) && m.score >= config.cutoff;
    model_list.push_back(entry);
  }
  manifest["models"] = model_list;
  Json failed_models = Json::array();
  for (const auto& [id, why] : result.failed_models) {
    failed_models.push_back({{"id", id}, {"error", why}});
  }
  manifest["failed_models"] = failed_models;
  Json tasks = Json::array(), failed = Json::array();
  for (const auto& t : result.tasks) {
    Json entry{{"model", t.model},
               {"method", MethodId(t.method)},
               {"seed", t.seed},
               {"status", TaskStatusName(t.status)}};
    if (!t.error.empty()) entry["error"] = t.error;
    if (!t.counterfactual_exhausted.empty()) {
      entry["counterfactual_exhausted_samples"] = t.counterfactual_exhausted;
    }
    if (t.status == TaskStatus::kFailed) {
      failed.push_back(t.model + "_" + std::string(MethodId(t.method)));
      partial = true;
    }
    tasks.push_back(entry);
  }
  manifest["tasks"] = tasks;
  manifest["failed"] = failed;
  Json consensus = Json::array();
  for (const auto& r : result.consensus) {
    consensus.push_back({{"kind", ConsensusKindName(r.kind)},
                         {"subject", r.subject},
                         {"included", r.included},
                         {"top", r.ranking.empty() ? "" : r.ranking.front().feature}});
  }
  manifest["consensus"] = consensus;
  Json skipped = Json::array();
  for (const auto& [name, why] : result.skipped_consensus) {
    skipped.push_back({{"report", name}, {"reason", why}});
  }
  manifest["skipped_consensus"] = skipped;
  result.artifacts["timings.csv"] = "timings.csv";
  manifest["artifacts"] = result.artifacts;

  std::string timings = "kind,name,start_s,seconds\n";
  double elapsed = 0.0;
  for (const auto& [stage, seconds] : result.stage_seconds) {
    timings += "stage," + stage + "," + FormatNumber(elapsed) + "," + FormatNumber(seconds) + "\n";
    elapsed += seconds;
  }
  for (std::size_t i = 0; i < result.tasks.size(); ++i) {
    const auto& t = result.tasks[i];
    timings += "task," + t.model + "_" + std::string(MethodId(t.method)) + "," +
               FormatNumber(result.task_timings[i].start) + "," +
               FormatNumber(result.task_timings[i].seconds) + "\n";
  }
  InStage("write", [&] {
    WriteTextFile(config.outdir / "timings.csv", timings);
    WriteTextFile(config.outdir / "manifest.json", manifest.dump(2) + "\n");
    return 0;
  });
  result.artifacts["manifest.json"] = "manifest.json";
  result.exit_code = partial ? 3 : 0;
  return result;
}

std::vector<std::string> EmitTaskCommands(const RunConfig& config,
                                          const std::string& executable) {
  std::vector<std::pair<std::string, double>> stages;
  Prepared prepared = PrepareAndTrain(config, stages);
  ArtifactMap artifacts;
  InStage("write", [&] {
    WriteModelArtifacts(config, prepared, artifacts);
    return 0;
  });
  std::vector<std::string> commands;
  const std::string dir = fs::absolute(config.outdir).string();
  for (const auto& m : prepared.models) {
    for (Method method : config.methods) {
      commands.push_back("\"" + executable + "\" explain -r \"" + dir + "\" -m " + m.id +
                         " -x " + std::string(MethodId(method)));
    }
  }
  WriteTextFile(config.outdir / "tasks.txt", Join(commands, "\n") + "\n");
  return commands;
}

TaskResult ExplainFromRunDir(const fs::path& run_dir, const std::string& model_id,
                             Method method) {
  std::ifstream in(run_dir / "config.json");
  if (!in) throw ValidationError("no config.json in " + run_dir.string());
  std::stringstream text;
  text << in.rdbuf();
  RunConfig config = ConfigFromJson(text.str());
  config.outdir = run_dir;
  const PreparedData data = InStage("load", [&] { return PrepareData(config); });
  TrainedModel trained;
  trained.id = model_id;
  trained.model = LoadModel(run_dir / "models" / (model_id + ".model"));
  trained.config = trained.model->config();
  Evaluate(data.test, trained);
  TaskResult task = ExecuteTask(config, data, trained, method);
  ArtifactMap artifacts;
  WriteTaskArtifacts(config, data, task, run_dir, artifacts);
  return task;
}

}  // namespace attrib
