#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cocabo/cli/commands.hpp"

namespace cli = cocabo::cli;

int main(int argc, char** argv) {
  CLI::App app{"CoCaBO: Bayesian optimisation over mixed categorical and continuous inputs"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run every experiment in a spec file");
  std::string spec_path;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out, method, task;
  std::optional<int> budget, batch_size;
  std::optional<double> timeout;
  run->add_option("--spec", spec_path, "experiment spec (one JSON object per line)")->required();
  run->add_option("--jobs", jobs, "runs executed concurrently")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "master seed");
  run->add_option("--out", out, "output directory (overrides COCABO_OUT_DIR and the spec)");
  run->add_option("--method", method, "run only this method");
  run->add_option("--task", task, "replace the objective with this synthetic task");
  run->add_option("--budget", budget, "iterations per run")->check(CLI::PositiveNumber);
  run->add_option("--batch-size", batch_size, "points per iteration")->check(CLI::PositiveNumber);
  run->add_option("--timeout", timeout, "external objective timeout in seconds")->check(CLI::PositiveNumber);

  auto* exp = app.add_subcommand("export", "convert history files to CSV");
  std::vector<std::string> inputs;
  std::string export_out = "export";
  exp->add_option("inputs", inputs, "history files or directories")->required();
  exp->add_option("--out", export_out, "directory for evaluations.csv and bandit_trace.csv");

  auto* list = app.add_subcommand("list-tasks", "list the built-in synthetic tasks and methods");

  auto* validate = app.add_subcommand("validate-spec", "parse a spec and print its canonical form");
  std::string validate_path;
  validate->add_option("--spec", validate_path, "experiment spec")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (*run) {
    cli::Overrides o{seed, out, method, task, budget, batch_size, timeout};
    return cli::run_command(spec_path, o, jobs, std::cout, std::cerr);
  }
  if (*exp) {
    std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
    return cli::export_command(paths, export_out, std::cout, std::cerr);
  }
  if (*list) return cli::list_tasks_command(std::cout);
  if (*validate) return cli::validate_spec_command(validate_path, std::cout, std::cerr);
  return cli::kExitUsage;
}
