#include <algorithm>
#include <set>

#include "json.hpp"

#include "attrib/error.h"
#include "attrib/pipeline.h"
#include "attrib/rng.h"
#include "attrib/text.h"

namespace attrib {
namespace {

using Json = nlohmann::ordered_json;

std::size_t ParseCount(std::string_view text, std::string_view what) {
  const auto value = ParseNumber(text);
  if (!value || *value < 0 || *value != static_cast<double>(static_cast<std::size_t>(*value))) {
    throw ValidationError("invalid " + std::string(what) + " '" + std::string(text) + "'");
  }
  return static_cast<std::size_t>(*value);
}

}  // namespace

std::string_view MethodId(Method method) {
  switch (method) {
    case Method::kPermutation: return "permutation";
    case Method::kLime: return "lime";
    case Method::kShap: return "shap";
    case Method::kIg: return "ig";
    case Method::kCounterfactual: return "counterfactual";
    case Method::kPdp: return "pdp";
    case Method::kAle: return "ale";
  }
  return "unknown";
}

Method ParseMethod(std::string_view name) {
  const std::string lower = ToLower(Trim(name));
  for (Method m : kAllMethods) {
    if (lower == MethodId(m)) return m;
  }
  throw ValidationError("unknown method '" + std::string(name) + "'");
}

SampleSelector SampleSelector::Parse(std::string_view text) {
  const std::string lower = ToLower(Trim(text));
  SampleSelector s;
  if (lower == "all") return s;
  if (lower.rfind("first:", 0) == 0) {
    s.kind = Kind::kFirst;
    s.first = ParseCount(lower.substr(6), "sample count");
    if (s.first == 0) throw ValidationError("first:N needs N >= 1");
    return s;
  }
  if (lower.rfind("ids:", 0) == 0) {
    s.kind = Kind::kIds;
    for (const auto& part : SplitString(lower.substr(4), ',')) {
      s.ids.push_back(ParseCount(Trim(part), "sample id"));
    }
    std::sort(s.ids.begin(), s.ids.end());
    s.ids.erase(std::unique(s.ids.begin(), s.ids.end()), s.ids.end());
    if (s.ids.empty()) throw ValidationError("ids: selector is empty");
    return s;
  }
  throw ValidationError("invalid sample selector '" + std::string(text) +
                        "' (expected all, first:N or ids:a,b,...)");
}

std::string SampleSelector::ToString() const {
  switch (kind) {
    case Kind::kAll: return "all";
    case Kind::kFirst: return "first:" + std::to_string(first);
    case Kind::kIds: {
      std::vector<std::string> parts;
      for (auto id : ids) parts.push_back(std::to_string(id));
      return "ids:" + Join(parts, ",");
    }
  }
  return "all";
}

std::vector<std::size_t> SampleSelector::Resolve(
    const std::vector<std::size_t>& available) const {
  std::vector<std::size_t> positions;
  switch (kind) {
    case Kind::kAll:
      for (std::size_t i = 0; i < available.size(); ++i) positions.push_back(i);
      break;
    case Kind::kFirst:
      for (std::size_t i = 0; i < std::min(first, available.size()); ++i) positions.push_back(i);
      break;
    case Kind::kIds:
      for (std::size_t i = 0; i < available.size(); ++i) {
        if (std::binary_search(ids.begin(), ids.end(), available[i])) positions.push_back(i);
      }
      break;
  }
  return positions;
}

void RunConfig::Validate() const {
  if (dataset.empty() == !rules.has_value()) {
    throw ValidationError("give exactly one input: a dataset CSV or a rule specification");
  }
  if (rules) {
    rules->Validate();
    if (synthetic_samples < 2) throw ValidationError("synthetic runs need at least 2 samples");
  }
  if (target.empty()) throw ValidationError("target column is empty");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test fraction must lie strictly between 0 and 1");
  }
  if (families.empty()) throw ValidationError("at least one model family is required");
  if (methods.empty()) throw ValidationError("at least one method is required");
  if (std::set<Family>(families.begin(), families.end()).size() != families.size()) {
    throw ValidationError("model families are listed twice");
  }
  if (std::set<Method>(methods.begin(), methods.end()).size() != methods.size()) {
    throw ValidationError("methods are listed twice");
  }
  if (workers < 1) throw ValidationError("workers must be at least 1");
  if (!(cutoff >= 0.0 && cutoff <= 1.0)) throw ValidationError("cutoff must lie in [0, 1]");
  if (k_folds < 2) throw ValidationError("k_folds must be at least 2");
  for (const auto& [family, grid] : grids) {
    if (grid.family != family) throw ValidationError("grid registered under the wrong family");
    for (const auto& [axis, values] : grid.axes) {
      if (values.empty()) throw ValidationError("grid axis '" + axis + "' has no values");
    }
    for (const auto& point : grid.Expand()) ValidateConfig({family, point, seed});
  }
  const auto& p = params;
  if (p.permutation_repeats < 1 || p.shap_budget < 4 || p.shap_background < 1 ||
      p.lime_perturbations < 2 || p.lime_rules < 0 || p.ig_steps < 2 ||
      p.counterfactuals < 1 || p.counterfactual_budget < 1 || p.pdp_grid < 2 ||
      p.ale_bins < 1) {
    throw ValidationError("method parameters out of range");
  }
}

std::string ConfigToJson(const RunConfig& config) {
  Json j;
  if (config.rules) {
    j["rules"] = FormatRuleSpec(*config.rules);
    j["synthetic_samples"] = config.synthetic_samples;
  } else {
    j["dataset"] = config.dataset.string();
  }
  j["target"] = config.target;
  j["task"] = TaskName(config.task);
  j["test_fraction"] = config.test_fraction;
  j["stratified_split"] = config.task == Task::kClassification;
  j["selection_metric"] = DefaultMetric(config.task);
  j["k_folds"] = config.k_folds;
  Json families = Json::array();
  Json grids = Json::object();
  for (Family f : config.families) {
    families.push_back(FamilyId(f));
    const auto it = config.grids.find(f);
    const ParamGrid grid = it == config.grids.end() ? DefaultGrid(f) : it->second;
    Json axes = Json::object();
    for (const auto& [name, values] : grid.axes) axes[name] = values;
    grids[std::string(FamilyId(f))] = axes;
  }
  j["families"] = families;
  j["grids"] = grids;
  Json methods = Json::array();
  for (Method m : config.methods) methods.push_back(MethodId(m));
  j["methods"] = methods;
  j["explain"] = config.explain.ToString();
  j["seed"] = config.seed;
  j["cutoff"] = config.cutoff;
  j["plots"] = config.plots;
  const auto& p = config.params;
  j["params"] = {{"permutation_repeats", p.permutation_repeats},
                 {"shap_budget", p.shap_budget},
                 {"shap_background", p.shap_background},
                 {"lime_perturbations", p.lime_perturbations},
                 {"lime_rules", p.lime_rules},
                 {"lime_kernel_width", "0.75*sqrt(n_features)"},
                 {"ig_steps", p.ig_steps},
                 {"ig_baseline", "training_mean"},
                 {"counterfactuals", p.counterfactuals},
                 {"counterfactual_budget", p.counterfactual_budget},
                 {"pdp_grid", p.pdp_grid},
                 {"ale_bins", p.ale_bins},
                 {"curve_features", p.curve_features}};
  return j.dump(2);
}

RunConfig ConfigFromJson(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw ValidationError(std::string("invalid run configuration: ") + e.what());
  }
  RunConfig c;
  try {
    if (j.contains("rules")) {
      c.rules = ParseRuleSpec(j.at("rules").get<std::string>());
      c.synthetic_samples = j.at("synthetic_samples").get<std::size_t>();
    } else {
      c.dataset = j.at("dataset").get<std::string>();
    }
    c.target = j.at("target").get<std::string>();
    c.task = ParseTask(j.at("task").get<std::string>());
    c.test_fraction = j.at("test_fraction").get<double>();
    c.k_folds = j.at("k_folds").get<int>();
    for (const auto& f : j.at("families")) c.families.push_back(ParseFamily(f.get<std::string>()));
    for (const auto& [name, axes] : j.at("grids").items()) {
      ParamGrid grid;
      grid.family = ParseFamily(name);
      for (const auto& [axis, values] : axes.items()) {
        grid.axes[axis] = values.get<std::vector<double>>();
      }
      c.grids[grid.family] = grid;
    }
    for (const auto& m : j.at("methods")) c.methods.push_back(ParseMethod(m.get<std::string>()));
    c.explain = SampleSelector::Parse(j.at("explain").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.cutoff = j.at("cutoff").get<double>();
    c.plots = j.at("plots").get<bool>();
    const auto& p = j.at("params");
    c.params.permutation_repeats = p.at("permutation_repeats").get<int>();
    c.params.shap_budget = p.at("shap_budget").get<std::size_t>();
    c.params.shap_background = p.at("shap_background").get<std::size_t>();
    c.params.lime_perturbations = p.at("lime_perturbations").get<int>();
    c.params.lime_rules = p.at("lime_rules").get<int>();
    c.params.ig_steps = p.at("ig_steps").get<int>();
    c.params.counterfactuals = p.at("counterfactuals").get<int>();
    c.params.counterfactual_budget = p.at("counterfactual_budget").get<int>();
    c.params.pdp_grid = p.at("pdp_grid").get<int>();
    c.params.ale_bins = p.at("ale_bins").get<int>();
    c.params.curve_features = p.at("curve_features").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid run configuration: ") + e.what());
  }
  return c;
}

std::uint64_t TaskSeed(std::uint64_t seed, std::string_view model, std::string_view method) {
  return Mix64(seed ^ StableHash(std::string(model) + '\x1f' + std::string(method)));
}

}  // namespace attrib
