#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "json.hpp"

#include "attrib/error.h"
#include "attrib/pipeline.h"

using namespace attrib;
namespace fs = std::filesystem;

namespace {

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path TempDir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("attrib_pipeline_" + name);
  fs::remove_all(dir);
  return dir;
}

// Relative path -> bytes for every file below dir.
std::map<std::string, std::string> Snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = Slurp(e.path());
  }
  return out;
}

RunConfig SmallConfig(const fs::path& outdir) {
  RunConfig c;
  c.rules = ParseRuleSpec("n_features = 5\nF3, 0.5, inf\nF1, -inf, 0.8\n");
  c.synthetic_samples = 240;
  c.families = {Family::kDecisionTree, Family::kLogReg};
  c.grids[Family::kDecisionTree] = ParamGrid{Family::kDecisionTree, {{"max_depth", {2, 4}}}};
  c.grids[Family::kLogReg] = ParamGrid{Family::kLogReg, {{"l2", {1e-3}}}};
  c.methods = {Method::kPermutation, Method::kLime, Method::kShap};
  c.explain = SampleSelector::Parse("first:4");
  c.seed = 11;
  c.k_folds = 3;
  c.params.lime_perturbations = 200;
  c.params.shap_background = 8;
  c.outdir = outdir;
  return c;
}

}  // namespace

TEST_CASE("run: output is byte-identical across worker counts") {
  const auto a = TempDir("w1"), b = TempDir("w8");
  RunConfig config = SmallConfig(a);
  config.methods = {Method::kPermutation, Method::kLime, Method::kShap, Method::kIg,
                    Method::kCounterfactual, Method::kPdp, Method::kAle};
  config.workers = 1;
  const auto serial = Run(config);
  config.outdir = b;
  config.workers = 8;
  const auto parallel = Run(config);
  CHECK(serial.exit_code == 0);
  CHECK(parallel.exit_code == 0);

  auto left = Snapshot(a), right = Snapshot(b);
  REQUIRE(left.count("timings.csv") == 1);
  left.erase("timings.csv");
  right.erase("timings.csv");
  CHECK(left.size() == right.size());
  for (const auto& [name, bytes] : left) {
    CAPTURE(name);
    REQUIRE(right.count(name) == 1);
    CHECK(bytes == right.at(name));
  }

  const auto manifest = nlohmann::json::parse(Slurp(a / "manifest.json"));
  for (const auto& [name, path] : manifest["artifacts"].items()) {
    CAPTURE(name);
    CHECK(fs::exists(a / path.get<std::string>()));
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("run: artifact counts for two models and three methods") {
  const auto dir = TempDir("count");
  const auto result = Run(SmallConfig(dir));
  std::size_t globals = 0, metrics = 0, consensus = 0;
  for (const auto& [name, path] : result.artifacts) {
    globals += name.ends_with("_global.csv");
    metrics += name.ends_with("_metrics.csv");
    consensus += name.starts_with("consensus_") && name.ends_with(".csv");
  }
  CHECK(globals == 6);
  CHECK(metrics == 2);
  // Two per method plus one per model, unless a method had no model over the cutoff.
  CHECK(consensus == result.consensus.size());
  CHECK(result.consensus.size() + result.skipped_consensus.size() == 3 * 2 + 2);
  CHECK(fs::exists(dir / "rules" / "dt_lime_rules.csv"));
  CHECK(fs::exists(dir / "attributions" / "logreg_shap_attribution.csv"));
  fs::remove_all(dir);
}

TEST_CASE("run: identical config in place gives an identical manifest") {
  const auto dir = TempDir("idem");
  RunConfig config = SmallConfig(dir);
  config.plots = false;
  Run(config);
  const std::string first = Slurp(dir / "manifest.json");
  Run(config);
  CHECK(Slurp(dir / "manifest.json") == first);
  fs::remove_all(dir);
}

TEST_CASE("run: seeds depend on ids, not model order or output directory") {
  const auto a = TempDir("order_a"), b = TempDir("order_b");
  RunConfig config = SmallConfig(a);
  config.plots = false;
  Run(config);
  config.families = {Family::kLogReg, Family::kDecisionTree};
  config.outdir = b;
  Run(config);
  for (const char* name : {"dt_lime_attribution.csv", "logreg_shap_attribution.csv",
                           "dt_permutation_global.csv"}) {
    CAPTURE(name);
    CHECK(Slurp(a / "attributions" / name) == Slurp(b / "attributions" / name));
  }
  CHECK(TaskSeed(11, "dt", "lime") == TaskSeed(11, "dt", "lime"));
  CHECK(TaskSeed(11, "dt", "lime") != TaskSeed(11, "lime", "dt"));
  CHECK(TaskSeed(11, "dt", "lime") != TaskSeed(12, "dt", "lime"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("run: failing tasks are isolated and reported") {
  const auto dir = TempDir("failed");
  RunConfig config = SmallConfig(dir);
  // No test sample carries this id, so local methods have nothing to explain.
  config.explain = SampleSelector::Parse("ids:100000");
  const auto result = Run(config);
  CHECK(result.exit_code == 3);
  const auto manifest = nlohmann::json::parse(Slurp(dir / "manifest.json"));
  std::set<std::string> failed;
  for (const auto& f : manifest["failed"]) failed.insert(f.get<std::string>());
  CHECK(failed == std::set<std::string>{"dt_lime", "dt_shap", "logreg_lime", "logreg_shap"});
  CHECK(Slurp(dir / "attributions" / "dt_lime_global.csv").starts_with("status=failed\n"));
  CHECK(Slurp(dir / "attributions" / "dt_permutation_global.csv").starts_with("feature,"));
  fs::remove_all(dir);
}

TEST_CASE("run: not-applicable methods are skipped") {
  const auto dir = TempDir("na");
  RunConfig config = SmallConfig(dir);
  config.methods = {Method::kIg};
  config.plots = false;
  const auto result = Run(config);
  CHECK(result.exit_code == 0);
  REQUIRE(result.tasks.size() == 2);
  CHECK(result.tasks[0].status == TaskStatus::kNotApplicable);
  CHECK(result.tasks[1].status == TaskStatus::kOk);
  CHECK_FALSE(fs::exists(dir / "attributions" / "dt_ig_global.csv"));
  fs::remove_all(dir);
}

TEST_CASE("config validation rejects bad settings before training") {
  CHECK_THROWS_AS(ParseMethod("deeplift"), ValidationError);
  RunConfig config = SmallConfig(TempDir("invalid"));
  config.methods.clear();
  CHECK_THROWS_AS(Run(config), ValidationError);
  config = SmallConfig(TempDir("invalid"));
  config.workers = 0;
  CHECK_THROWS_AS(config.Validate(), ValidationError);
  config.workers = 1;
  config.cutoff = 1.2;
  CHECK_THROWS_AS(config.Validate(), ValidationError);
  config.cutoff = 0.75;
  config.dataset = "data.csv";
  CHECK_THROWS_AS(config.Validate(), ValidationError);
  CHECK_FALSE(fs::exists(TempDir("invalid")));
}

TEST_CASE("config json round trip") {
  RunConfig config = SmallConfig("out");
  config.params.ig_steps = 33;
  const std::string text = ConfigToJson(config);
  const RunConfig back = ConfigFromJson(text);
  CHECK(ConfigToJson(back) == text);
  CHECK(back.params.ig_steps == 33);
  CHECK(back.explain.ToString() == "first:4");
  CHECK_THROWS_AS(ConfigFromJson("{"), ValidationError);
}

TEST_CASE("sample selector") {
  const std::vector<std::size_t> available = {3, 8, 21, 40};
  CHECK(SampleSelector::Parse("all").Resolve(available) == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(SampleSelector::Parse("first:2").Resolve(available) == std::vector<std::size_t>{0, 1});
  CHECK(SampleSelector::Parse("ids:21,3,99").Resolve(available) == std::vector<std::size_t>{0, 2});
  CHECK(SampleSelector::Parse("ids:21,3").ToString() == "ids:3,21");
  CHECK_THROWS_AS(SampleSelector::Parse("some"), ValidationError);
  CHECK_THROWS_AS(SampleSelector::Parse("first:x"), ValidationError);
}

TEST_CASE("schedule: bounded concurrency, isolation and the empty case") {
  std::atomic<int> running{0}, peak{0};
  const auto timings = Schedule(8, 4, [&](std::size_t i) {
    const int now = ++running;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {}
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    --running;
    if (i == 5) throw std::runtime_error("task five");
  });
  REQUIRE(timings.size() == 8);
  CHECK(peak.load() <= 4);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(timings[i].ok == (i != 5));
    CHECK(timings[i].seconds >= 0.0);
  }
  CHECK(timings[5].error == "task five");

  // At most four recorded intervals overlap at any task start.
  for (const auto& t : timings) {
    int overlapping = 0;
    for (const auto& u : timings) overlapping += u.start <= t.start && t.start < u.start + u.seconds;
    CHECK(overlapping <= 4);
  }
  CHECK(Schedule(0, 3, [](std::size_t) { FAIL("no task expected"); }).empty());
  CHECK_THROWS_AS(Schedule(1, 0, [](std::size_t) {}), ValidationError);
}

TEST_CASE("emitted task commands reproduce in-process results") {
  const auto inproc = TempDir("inproc"), emitted = TempDir("emitted");
  RunConfig config = SmallConfig(inproc);
  config.plots = false;
  Run(config);
  config.outdir = emitted;
  const auto commands = EmitTaskCommands(config, "attrib");
  CHECK(commands.size() == 6);
  CHECK(fs::exists(emitted / "tasks.txt"));
  CHECK(commands[0].find(" explain -r ") != std::string::npos);
  const auto task = ExplainFromRunDir(emitted, "dt", Method::kShap);
  CHECK(task.status == TaskStatus::kOk);
  CHECK(Slurp(emitted / "attributions" / "dt_shap_attribution.csv") ==
        Slurp(inproc / "attributions" / "dt_shap_attribution.csv"));
  fs::remove_all(inproc);
  fs::remove_all(emitted);
}
