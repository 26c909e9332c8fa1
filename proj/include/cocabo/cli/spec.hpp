#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cocabo/optimizer.hpp"

namespace cocabo::cli {

inline constexpr int kSchemaVersion = 1;

enum class Method { CocaboZero, CocaboHalf, CocaboOne, CocaboAuto, OnehotBo, Random };

std::string to_string(Method m);
/// Throws ContractViolation on unknown names.
Method parse_method(const std::string& name);
const std::vector<Method>& all_methods();

struct ExternalSpec {
  std::string command;
  std::vector<int> categories;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double timeout_s = 3600.0;
};

struct ExperimentSpec {
  std::optional<std::string> task;
  std::optional<ExternalSpec> external;
  std::vector<Method> methods;
  int budget = 1;
  int batch_size = 1;
  int initial_design = 24;
  int refit_period = 10;
  double kappa = 2.0;
  std::uint64_t seed = 0;
  int repetitions = 1;
  std::string out = "results";

  /// Task name, or "external".
  std::string label() const;
  SearchSpace space() const;
  RunConfig run_config(Method m, int repetition) const;
};

/// One experiment per non-blank line. Throws ContractViolation with the line
/// number on any malformed or unknown field.
std::vector<ExperimentSpec> parse_spec_text(const std::string& text);
std::vector<ExperimentSpec> load_spec_file(const std::string& path);

/// Canonical single-line form; parse_spec_text inverts it.
std::string spec_to_line(const ExperimentSpec& spec);

/// Command-line overrides; unset fields leave the spec alone.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> method;
  std::optional<std::string> task;
  std::optional<int> budget;
  std::optional<int> batch_size;
  std::optional<double> timeout_s;
};

/// Applies overrides; `--out` wins over the COCABO_OUT_DIR environment
/// variable, which wins over the spec.
void apply_overrides(ExperimentSpec& spec, const Overrides& o);

}  // namespace cocabo::cli
