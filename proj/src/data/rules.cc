#include <fstream>
#include <sstream>

#include "attrib/data.h"
#include "attrib/error.h"
#include "attrib/rng.h"
#include "attrib/text.h"

namespace attrib {

int RuleSpec::Label(std::span<const double> row) const {
  for (const auto& predicate : predicates) {
    if (!predicate.Holds(row[predicate.feature_index])) return 0;
  }
  return 1;
}

void RuleSpec::Validate() const {
  if (n_features == 0) throw ValidationError("rule spec needs n_features >= 1");
  for (const auto& predicate : predicates) {
    if (predicate.feature_index >= n_features) {
      throw ValidationError("rule references F" +
                            std::to_string(predicate.feature_index + 1) +
                            " but n_features is " + std::to_string(n_features));
    }
    if (!(predicate.lower <= predicate.upper)) {
      throw ValidationError("rule on F" +
                            std::to_string(predicate.feature_index + 1) +
                            " has lower bound above upper bound");
    }
  }
}

RuleSpec ParseRuleSpec(std::string_view text) {
  RuleSpec spec;
  bool have_count = false;
  std::size_t line_number = 0;
  for (const auto& raw : SplitString(text, '\n')) {
    ++line_number;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    const auto where = "rule spec line " + std::to_string(line_number) + ": ";

    if (const auto eq = line.find('='); eq != std::string_view::npos) {
      if (Trim(line.substr(0, eq)) != "n_features") {
        throw ValidationError(where + "unknown setting");
      }
      const auto count = ParseNumber(line.substr(eq + 1));
      if (!count || *count < 1 || *count != static_cast<double>(static_cast<std::size_t>(*count))) {
        throw ValidationError(where + "n_features must be a positive integer");
      }
      spec.n_features = static_cast<std::size_t>(*count);
      have_count = true;
      continue;
    }

    const auto fields = SplitString(line, ',');
    if (fields.size() != 3) {
      throw ValidationError(where + "expected 'F<k>, lower, upper'");
    }
    const std::string_view name = Trim(fields[0]);
    const auto index = name.size() > 1 && (name[0] == 'F' || name[0] == 'f')
                           ? ParseNumber(name.substr(1))
                           : std::nullopt;
    if (!index || *index < 1 || *index != static_cast<double>(static_cast<std::size_t>(*index))) {
      throw ValidationError(where + "feature must be written F<k> with k >= 1");
    }
    const auto lower = ParseNumber(fields[1]);
    const auto upper = ParseNumber(fields[2]);
    if (!lower || !upper) throw ValidationError(where + "bad bound");
    spec.predicates.push_back(
        {static_cast<std::size_t>(*index) - 1, *lower, *upper});
  }
  if (!have_count) throw ValidationError("rule spec is missing n_features");
  spec.Validate();
  return spec;
}

RuleSpec LoadRuleSpec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open rule spec '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseRuleSpec(buffer.str());
}

std::string FormatRuleSpec(const RuleSpec& spec) {
  std::string out = "n_features = " + std::to_string(spec.n_features) + "\n";
  for (const auto& p : spec.predicates) {
    out += "F" + std::to_string(p.feature_index + 1) + ", " +
           FormatNumber(p.lower) + ", " + FormatNumber(p.upper) + "\n";
  }
  return out;
}

Dataset GenerateSynthetic(const RuleSpec& spec, std::size_t n_samples,
                          std::uint64_t seed) {
  spec.Validate();
  if (n_samples < 1) throw ValidationError("n_samples must be at least 1");
  Rng rng(seed);
  Dataset out;
  out.task = Task::kClassification;
  out.class_labels = {"0", "1"};
  out.target_name = "class";
  out.features = Matrix(n_samples, spec.n_features);
  out.target.resize(n_samples);
  for (std::size_t f = 0; f < spec.n_features; ++f) {
    out.columns.push_back({"F" + std::to_string(f + 1),
                           ColumnMeta::Kind::kNumeric, {}});
  }
  for (std::size_t r = 0; r < n_samples; ++r) {
    for (auto& v : out.features.row(r)) v = rng.Uniform();
    out.target[r] = spec.Label(out.features.row(r));
  }
  return out;
}

}  // namespace attrib
