#include "cocabo/cli/spec.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cocabo/benchmarks.hpp"
#include "cocabo/errors.hpp"

namespace cocabo::cli {

using nlohmann::json;

namespace {

const std::vector<std::pair<Method, std::string>>& method_names() {
  static const std::vector<std::pair<Method, std::string>> names = {
      {Method::CocaboZero, "cocabo-0"}, {Method::CocaboHalf, "cocabo-0.5"}, {Method::CocaboOne, "cocabo-1"},
      {Method::CocaboAuto, "cocabo-auto"}, {Method::OnehotBo, "onehot-bo"},  {Method::Random, "random"},
  };
  return names;
}

Eigen::VectorXd to_vector(const json& j, const char* what) {
  require(j.is_array(), std::string(what) + " must be an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    require(j[i].is_number(), std::string(what) + " must be an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

template <typename T>
T get_number(const json& j, const char* key) {
  if constexpr (std::is_integral_v<T>) {
    require(j.is_number_integer(), std::string(key) + " must be an integer");
  } else {
    require(j.is_number(), std::string(key) + " must be a number");
  }
  return j.get<T>();
}

ExternalSpec parse_external(const json& j) {
  require(j.is_object(), "external must be an object");
  ExternalSpec e;
  for (const auto& [key, value] : j.items()) {
    if (key == "command") {
      require(value.is_string() && !value.get<std::string>().empty(), "external.command must be a non-empty string");
      e.command = value.get<std::string>();
    } else if (key == "categories") {
      require(value.is_array(), "external.categories must be an array of integers");
      for (const auto& n : value) {
        require(n.is_number_integer() && n.get<int>() >= 1, "external.categories entries must be positive integers");
        e.categories.push_back(n.get<int>());
      }
    } else if (key == "lower") {
      e.lower = to_vector(value, "external.lower");
    } else if (key == "upper") {
      e.upper = to_vector(value, "external.upper");
    } else if (key == "timeout") {
      e.timeout_s = get_number<double>(value, "external.timeout");
    } else {
      throw ContractViolation("unknown field external." + key);
    }
  }
  require(!e.command.empty(), "external.command is required");
  require(e.lower.size() >= 1 && e.lower.size() == e.upper.size(), "external.lower/upper must have equal, nonzero length");
  require(e.timeout_s > 0.0, "external.timeout must be positive");
  return e;
}

void validate(const ExperimentSpec& s) {
  require(s.task.has_value() != s.external.has_value(), "exactly one of task and external is required");
  if (s.task) make_task(*s.task);
  require(!s.methods.empty(), "at least one method is required");
  require(s.budget >= 1, "budget must be at least 1");
  require(s.batch_size >= 1, "batch_size must be at least 1");
  require(s.initial_design >= 1, "initial_design must be at least 1");
  require(s.refit_period >= 1, "refit_period must be at least 1");
  require(s.kappa >= 0.0, "kappa must be non-negative");
  require(s.repetitions >= 1, "repetitions must be at least 1");
  require(!s.out.empty(), "out must be non-empty");
  s.space();
}

ExperimentSpec parse_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("invalid JSON: ") + e.what());
  }
  require(j.is_object(), "each line must be a JSON object");
  require(j.contains("schema_version"), "schema_version is required");

  ExperimentSpec s;
  for (const auto& [key, value] : j.items()) {
    if (key == "schema_version") {
      require(value.is_number_integer() && value.get<int>() == kSchemaVersion,
              "unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
    } else if (key == "task") {
      require(value.is_string(), "task must be a string");
      s.task = value.get<std::string>();
    } else if (key == "external") {
      s.external = parse_external(value);
    } else if (key == "method" || key == "methods") {
      const json list = value.is_array() ? value : json::array({value});
      for (const auto& m : list) {
        require(m.is_string(), key + " entries must be strings");
        s.methods.push_back(parse_method(m.get<std::string>()));
      }
    } else if (key == "budget") {
      s.budget = get_number<int>(value, "budget");
    } else if (key == "batch_size") {
      s.batch_size = get_number<int>(value, "batch_size");
    } else if (key == "initial_design") {
      s.initial_design = get_number<int>(value, "initial_design");
    } else if (key == "refit_period") {
      s.refit_period = get_number<int>(value, "refit_period");
    } else if (key == "kappa") {
      s.kappa = get_number<double>(value, "kappa");
    } else if (key == "seed") {
      require(value.is_number_unsigned() || (value.is_number_integer() && value.get<long long>() >= 0),
              "seed must be a non-negative integer");
      s.seed = value.get<std::uint64_t>();
    } else if (key == "repetitions") {
      s.repetitions = get_number<int>(value, "repetitions");
    } else if (key == "out") {
      require(value.is_string(), "out must be a string");
      s.out = value.get<std::string>();
    } else {
      throw ContractViolation("unknown field " + key);
    }
  }
  validate(s);
  return s;
}

}  // namespace

std::string to_string(Method m) {
  for (const auto& [method, name] : method_names())
    if (method == m) return name;
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (const auto& [method, n] : method_names())
    if (n == name) return method;
  std::string known;
  for (const auto& [method, n] : method_names()) known += (known.empty() ? "" : ", ") + n;
  throw ContractViolation("unknown method '" + name + "' (expected one of " + known + ")");
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = [] {
    std::vector<Method> m;
    for (const auto& [method, name] : method_names()) m.push_back(method);
    return m;
  }();
  return methods;
}

std::string ExperimentSpec::label() const { return task ? *task : "external"; }

SearchSpace ExperimentSpec::space() const {
  if (task) return make_task(*task).space;
  require(external.has_value(), "spec names neither a task nor an external objective");
  return SearchSpace(external->categories, Box{external->lower, external->upper});
}

RunConfig ExperimentSpec::run_config(Method m, int repetition) const {
  RunConfig cfg;
  cfg.space = space();
  cfg.budget = budget;
  cfg.batch_size = batch_size;
  cfg.initial_design = initial_design;
  cfg.refit_period = refit_period;
  cfg.kappa = kappa;
  cfg.seed = derive_seed(seed, static_cast<std::uint64_t>(repetition));
  switch (m) {
    case Method::CocaboZero: cfg.lambda_mode = LambdaMode::Zero; break;
    case Method::CocaboOne: cfg.lambda_mode = LambdaMode::One; break;
    case Method::CocaboAuto: cfg.lambda_mode = LambdaMode::Auto; break;
    default: cfg.lambda_mode = LambdaMode::Half; break;
  }
  return cfg;
}

std::vector<ExperimentSpec> parse_spec_text(const std::string& text) {
  std::vector<ExperimentSpec> specs;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      specs.push_back(parse_line(line));
    } catch (const ContractViolation& e) {
      throw ContractViolation("spec line " + std::to_string(number) + ": " + e.what());
    }
  }
  require(!specs.empty(), "spec contains no experiments");
  return specs;
}

std::vector<ExperimentSpec> load_spec_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot read spec file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_spec_text(buffer.str());
}

std::string spec_to_line(const ExperimentSpec& s) {
  json j;
  j["schema_version"] = kSchemaVersion;
  if (s.task) j["task"] = *s.task;
  if (s.external) {
    const auto& e = *s.external;
    j["external"] = {{"command", e.command},
                     {"categories", e.categories},
                     {"lower", std::vector<double>(e.lower.data(), e.lower.data() + e.lower.size())},
                     {"upper", std::vector<double>(e.upper.data(), e.upper.data() + e.upper.size())},
                     {"timeout", e.timeout_s}};
  }
  json methods = json::array();
  for (Method m : s.methods) methods.push_back(to_string(m));
  j["methods"] = methods;
  j["budget"] = s.budget;
  j["batch_size"] = s.batch_size;
  j["initial_design"] = s.initial_design;
  j["refit_period"] = s.refit_period;
  j["kappa"] = s.kappa;
  j["seed"] = s.seed;
  j["repetitions"] = s.repetitions;
  j["out"] = s.out;
  return j.dump();
}

void apply_overrides(ExperimentSpec& s, const Overrides& o) {
  if (o.seed) s.seed = *o.seed;
  if (const char* env = std::getenv("COCABO_OUT_DIR"); env && *env) s.out = env;
  if (o.out) s.out = *o.out;
  if (o.method) s.methods = {parse_method(*o.method)};
  if (o.task) {
    s.task = *o.task;
    s.external.reset();
  }
  if (o.budget) s.budget = *o.budget;
  if (o.batch_size) s.batch_size = *o.batch_size;
  if (o.timeout_s && s.external) s.external->timeout_s = *o.timeout_s;
  validate(s);
}

}  // namespace cocabo::cli
