#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "attrib/consensus.h"
#include "attrib/data.h"
#include "attrib/error.h"
#include "attrib/pipeline.h"
#include "attrib/report.h"
#include "attrib/text.h"

namespace {

namespace fs = std::filesystem;
using namespace attrib;

constexpr int kExitValidation = 1;
constexpr int kExitStage = 2;

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& part : SplitString(text, ',')) {
    const auto t = Trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

double ParseOrThrow(std::string_view text, std::string_view what) {
  const auto v = ParseNumber(text);
  if (!v) throw ValidationError("invalid " + std::string(what) + " '" + std::string(text) + "'");
  return *v;
}

// "rf:n_trees=50,100" overrides one grid axis.
void ApplyGrid(RunConfig& config, const std::string& text) {
  const auto colon = text.find(':');
  const auto eq = text.find('=');
  if (colon == std::string::npos || eq == std::string::npos || eq < colon) {
    throw ValidationError("grid override '" + text + "' must look like family:axis=v1,v2");
  }
  const Family family = ParseFamily(text.substr(0, colon));
  auto it = config.grids.find(family);
  if (it == config.grids.end()) it = config.grids.emplace(family, DefaultGrid(family)).first;
  std::vector<double> values;
  for (const auto& v : SplitList(text.substr(eq + 1))) values.push_back(ParseOrThrow(v, "grid value"));
  it->second.axes[std::string(Trim(text.substr(colon + 1, eq - colon - 1)))] = values;
}

void ApplyParam(MethodParams& p, const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ValidationError("parameter '" + text + "' needs key=value");
  const std::string key(Trim(text.substr(0, eq)));
  const double v = ParseOrThrow(Trim(text.substr(eq + 1)), key);
  const auto as_int = static_cast<int>(v);
  const auto as_size = static_cast<std::size_t>(std::max(0.0, v));
  if (key == "permutation_repeats") p.permutation_repeats = as_int;
  else if (key == "shap_budget") p.shap_budget = as_size;
  else if (key == "shap_background") p.shap_background = as_size;
  else if (key == "lime_perturbations") p.lime_perturbations = as_int;
  else if (key == "lime_rules") p.lime_rules = as_int;
  else if (key == "ig_steps") p.ig_steps = as_int;
  else if (key == "counterfactuals") p.counterfactuals = as_int;
  else if (key == "counterfactual_budget") p.counterfactual_budget = as_int;
  else if (key == "pdp_grid") p.pdp_grid = as_int;
  else if (key == "ale_bins") p.ale_bins = as_int;
  else if (key == "curve_features") p.curve_features = as_size;
  else throw ValidationError("unknown method parameter '" + key + "'");
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// test_score column of a model_scores.csv.
ModelScores ReadScores(const fs::path& path) {
  std::istringstream in(ReadFile(path));
  std::string line;
  std::getline(in, line);
  const auto header = SplitString(line, ',');
  const auto col = std::find(header.begin(), header.end(), "test_score") - header.begin();
  if (col == static_cast<std::ptrdiff_t>(header.size())) {
    throw ValidationError(path.string() + " has no test_score column");
  }
  ModelScores scores;
  while (std::getline(in, line)) {
    const auto cells = SplitString(line, ',');
    if (cells.size() <= static_cast<std::size_t>(col)) continue;
    scores[std::string(Trim(cells[0]))] = ParseOrThrow(cells[col], "score");
  }
  return scores;
}

// "<model>_<method>_global.csv" -> (model, method).
std::pair<std::string, std::string> ParseAttributionName(const fs::path& path) {
  std::string stem = path.stem().string();
  const std::string suffix = "_global";
  if (stem.size() > suffix.size() && stem.ends_with(suffix)) {
    stem.resize(stem.size() - suffix.size());
  }
  const auto underscore = stem.find('_');
  if (underscore == std::string::npos) {
    throw ValidationError(path.string() + " is not named <model>_<method>_global.csv");
  }
  return {stem.substr(0, underscore), stem.substr(underscore + 1)};
}

int RunConsensus(const std::string& kind_name, const std::vector<std::string>& inputs,
                 const fs::path& outdir, const std::string& scores_path, double cutoff) {
  const ConsensusKind kind = ParseConsensusKind(kind_name);
  std::map<std::string, Contributions> groups;
  for (const auto& input : inputs) {
    const auto [model, method] = ParseAttributionName(input);
    AttributionVector v = ReadGlobalCsv(input);
    v.model = model;
    v.method = method;
    if (kind == ConsensusKind::kRankByModel) {
      groups[model][method] = std::move(v);
    } else {
      groups[method][model] = std::move(v);
    }
  }
  ModelScores scores;
  const bool filtered = !scores_path.empty();
  if (filtered) scores = ReadScores(scores_path);
  for (const auto& [subject, contributions] : groups) {
    ConsensusReport report;
    if (kind == ConsensusKind::kRankByModel) {
      report = ConsensusRankByModel(subject, contributions);
    } else {
      ModelScores used = scores;
      if (!filtered) {
        for (const auto& [model, v] : contributions) used[model] = 1.0;
      }
      report = kind == ConsensusKind::kAttributionByMethod
                   ? ConsensusAttributionByMethod(subject, contributions, used,
                                                  filtered ? cutoff : 0.0)
                   : ConsensusRankByMethod(subject, contributions, used, filtered ? cutoff : 0.0);
      report.filtered = filtered;
    }
    const std::string stem = "consensus_" + kind_name + "_" + subject;
    WriteTextFile(outdir / (stem + ".csv"), ConsensusCsv(report));
    WriteTextFile(outdir / (stem + ".json"), ConsensusSidecar(report));
    RenderSvg(ConsensusBarPlot(report, 10), outdir / (stem + ".svg"));
    std::cout << stem << ": top feature " << report.ranking.front().feature << "\n";
  }
  return 0;
}

std::string HeaderLastColumn(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  if (!in || !std::getline(in, line)) throw ValidationError("cannot read header of " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto cells = SplitString(line, ',');
  return std::string(Trim(cells.back()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train tabular models, explain them and merge the explanations."};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Train, evaluate, explain and build consensus");
  std::string data_path, rules_path, target = "class", task_name = "classification";
  std::string families = "dt,rf,gbt,knn,logreg,mlp";
  std::string methods = "permutation,lime,shap,ig,counterfactual,pdp,ale";
  std::string selector = "all", outdir;
  std::size_t samples = 0;
  int workers = 1, k_folds = 5;
  std::uint64_t seed = 0;
  double cutoff = kDefaultCutoff, test_fraction = 0.2;
  bool no_plots = false, emit_tasks = false;
  std::vector<std::string> grid_overrides, param_overrides;
  auto* data_opt = run->add_option("-d,--data", data_path, "Input CSV");
  auto* rules_opt = run->add_option("-r,--rules", rules_path, "Rule specification for synthetic data");
  data_opt->excludes(rules_opt);
  run->add_option("-n,--samples", samples, "Synthetic sample count");
  run->add_option("-t,--target", target, "Target column")->capture_default_str();
  run->add_option("-k,--task", task_name, "classification or regression")->capture_default_str();
  run->add_option("-m,--models", families, "Model families, comma separated")->capture_default_str();
  run->add_option("-x,--methods", methods, "Methods, comma separated")->capture_default_str();
  run->add_option("-q,--workers", workers, "Worker threads")->capture_default_str();
  run->add_option("-s,--seed", seed, "Random seed")->capture_default_str();
  run->add_option("-c,--cutoff", cutoff, "Consensus score cutoff")->capture_default_str();
  run->add_option("-e,--explain", selector, "Samples to explain: all, first:N, ids:a,b")
      ->capture_default_str();
  run->add_option("-o,--out", outdir, "Output directory")->required();
  run->add_option("--test-fraction", test_fraction, "Hold-out fraction")->capture_default_str();
  run->add_option("--k-folds", k_folds, "Cross-validation folds")->capture_default_str();
  run->add_option("--grid", grid_overrides, "Grid axis override family:axis=v1,v2");
  run->add_option("--param", param_overrides, "Method parameter key=value");
  run->add_flag("--no-plots", no_plots, "Skip SVG output");
  run->add_flag("--emit-tasks", emit_tasks,
                "Train only and write one explain command per task to tasks.txt");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a rule-labelled dataset");
  std::string synth_rules, synth_out;
  std::size_t synth_n = 0;
  std::uint64_t synth_seed = 0;
  synth->add_option("-r,--rules", synth_rules, "Rule specification")->required();
  synth->add_option("-n,--samples", synth_n, "Sample count")->required();
  synth->add_option("-s,--seed", synth_seed, "Random seed")->capture_default_str();
  synth->add_option("-o,--out", synth_out, "Output CSV")->required();

  // consensus
  auto* consensus = app.add_subcommand("consensus", "Merge global attribution CSVs");
  std::string kind, scores_path, consensus_out;
  std::vector<std::string> inputs;
  double consensus_cutoff = kDefaultCutoff;
  consensus->add_option("kind", kind, "attribution_by_method, rank_by_method or rank_by_model")
      ->required();
  consensus->add_option("-i,--inputs", inputs, "<model>_<method>_global.csv files")->required();
  consensus->add_option("-o,--out", consensus_out, "Output directory")->required();
  consensus->add_option("-S,--scores", scores_path, "model_scores.csv for the cutoff filter");
  consensus->add_option("-c,--cutoff", consensus_cutoff, "Score cutoff")->capture_default_str();

  // encode
  auto* encode = app.add_subcommand("encode", "One-hot encode categorical columns");
  std::string encode_data, encode_columns, encode_out, encode_target;
  encode->add_option("-d,--data", encode_data, "Input CSV")->required();
  encode->add_option("-c,--columns", encode_columns, "Columns to encode, comma separated")
      ->required();
  encode->add_option("-t,--target", encode_target, "Target column (default: last column)");
  encode->add_option("-o,--out", encode_out, "Output CSV (default: stdout)");

  // explain
  auto* explain = app.add_subcommand("explain", "Run one task of a run prepared with --emit-tasks");
  std::string run_dir, model_id, method_id;
  explain->add_option("-r,--run-dir", run_dir, "Run directory")->required();
  explain->add_option("-m,--model", model_id, "Model id")->required();
  explain->add_option("-x,--method", method_id, "Method id")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*run) {
      RunConfig config;
      if (!rules_path.empty()) {
        config.rules = LoadRuleSpec(rules_path);
        config.synthetic_samples = samples;
      } else {
        config.dataset = data_path;
      }
      config.target = target;
      config.task = ParseTask(task_name);
      for (const auto& f : SplitList(families)) config.families.push_back(ParseFamily(f));
      for (const auto& m : SplitList(methods)) config.methods.push_back(ParseMethod(m));
      config.explain = SampleSelector::Parse(selector);
      config.workers = workers;
      config.seed = seed;
      config.cutoff = cutoff;
      config.test_fraction = test_fraction;
      config.k_folds = k_folds;
      config.outdir = outdir;
      config.plots = !no_plots;
      for (const auto& g : grid_overrides) ApplyGrid(config, g);
      for (const auto& p : param_overrides) ApplyParam(config.params, p);
      if (emit_tasks) {
        const auto commands = EmitTaskCommands(config, argv[0]);
        std::cout << commands.size() << " task commands written to "
                  << (fs::path(outdir) / "tasks.txt").string() << "\n";
        return 0;
      }
      const RunResult result = Run(config);
      for (const auto& m : result.models) {
        std::cout << m.id << ": test score " << FormatNumber(m.score) << "\n";
      }
      for (const auto& [id, why] : result.failed_models) {
        std::cerr << "model " << id << " failed: " << why << "\n";
      }
      for (const auto& t : result.tasks) {
        if (t.status == TaskStatus::kFailed) {
          std::cerr << "task " << t.model << "/" << MethodId(t.method) << " failed: " << t.error
                    << "\n";
        }
      }
      std::cout << "manifest: " << (fs::path(outdir) / "manifest.json").string() << "\n";
      return result.exit_code;
    }
    if (*synth) {
      const RuleSpec spec = LoadRuleSpec(synth_rules);
      WriteCsv(GenerateSynthetic(spec, synth_n, synth_seed), synth_out);
      return 0;
    }
    if (*consensus) {
      return RunConsensus(kind, inputs, consensus_out, scores_path, consensus_cutoff);
    }
    if (*encode) {
      const std::string tgt = encode_target.empty() ? HeaderLastColumn(encode_data) : encode_target;
      const Dataset data = LoadCsv(encode_data, tgt, Task::kClassification);
      const Dataset encoded = OneHotEncode(data, SplitList(encode_columns));
      if (encode_out.empty()) {
        WriteCsv(encoded, std::cout);
      } else {
        WriteCsv(encoded, encode_out);
      }
      return 0;
    }
    if (*explain) {
      const TaskResult task = ExplainFromRunDir(run_dir, model_id, ParseMethod(method_id));
      std::cout << model_id << "/" << method_id << ": " << TaskStatusName(task.status) << "\n";
      if (task.status == TaskStatus::kFailed) {
        std::cerr << task.error << "\n";
        return kExitStage;
      }
      return 0;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return 0;
}
