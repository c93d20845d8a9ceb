#include <fstream>
#include <istream>
#include <ostream>

#include "attrib/error.h"
#include "attrib/model.h"
#include "attrib/models/families.h"
#include "serial.h"

namespace attrib {
namespace {

constexpr std::string_view kMagic = "attrib-model";
constexpr int kFormatVersion = 1;

}  // namespace

void SaveModel(const Model& model, std::ostream& out) {
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "family " << FamilyId(model.family()) << '\n';
  out << "task " << TaskName(model.task()) << '\n';
  out << "n_features " << model.n_features() << '\n';
  out << "n_classes " << model.n_classes() << '\n';
  out << "seed " << model.config().seed << '\n';
  out << "params " << model.config().params.size() << '\n';
  for (const auto& [name, value] : model.config().params) {
    out << name << ' ' << FormatNumber(value) << '\n';
  }
  out << "state\n";
  model.WriteState(out);
  out << "end\n";
}

void SaveModel(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file '" + path.string() + "'");
  SaveModel(model, out);
}

ModelPtr LoadModel(std::istream& in) {
  serial::Expect(in, kMagic);
  const std::size_t version = serial::ReadCount(in);
  if (version != kFormatVersion) {
    throw ValidationError("unsupported model format version " + std::to_string(version));
  }
  ModelConfig config;
  serial::Expect(in, "family");
  config.family = ParseFamily(serial::ReadToken(in));
  serial::Expect(in, "task");
  const Task task = ParseTask(serial::ReadToken(in));
  serial::Expect(in, "n_features");
  const std::size_t n_features = serial::ReadCount(in);
  serial::Expect(in, "n_classes");
  const std::size_t n_classes = serial::ReadCount(in);
  serial::Expect(in, "seed");
  try {
    config.seed = std::stoull(serial::ReadToken(in));
  } catch (const std::exception&) {
    throw ValidationError("model file: bad seed");
  }
  serial::Expect(in, "params");
  const std::size_t n_params = serial::ReadCount(in);
  for (std::size_t i = 0; i < n_params; ++i) {
    const std::string name = serial::ReadToken(in);
    config.params[name] = serial::ReadNumber(in);
  }
  ValidateConfig(config);
  serial::Expect(in, "state");

  ModelPtr model;
  switch (config.family) {
    case Family::kDecisionTree:
      model = DecisionTreeModel::ReadState(config, task, n_features, n_classes, in);
      break;
    case Family::kRandomForest:
      model = RandomForestModel::ReadState(config, task, n_features, n_classes, in);
      break;
    case Family::kGradientBoosting:
      model = GradientBoostingModel::ReadState(config, task, n_features, n_classes, in);
      break;
    case Family::kKnn:
      model = KnnModel::ReadState(config, task, n_features, n_classes, in);
      break;
    case Family::kLogReg:
      model = LogisticModel::ReadState(config, task, n_features, n_classes, in);
      break;
    case Family::kMlp:
      model = MlpModel::ReadState(config, task, n_features, n_classes, in);
      break;
  }
  serial::Expect(in, "end");
  return model;
}

ModelPtr LoadModel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file '" + path.string() + "'");
  return LoadModel(in);
}

}  // namespace attrib
