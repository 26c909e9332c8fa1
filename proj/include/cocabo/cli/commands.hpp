#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "cocabo/cli/spec.hpp"

namespace cocabo::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;    // bad spec or arguments
inline constexpr int kExitAborted = 2;  // some run aborted; partial files kept
inline constexpr int kExitNothing = 3;  // export found nothing usable

/// File stem (no extension) of one run's history.
std::filesystem::path run_stem(const ExperimentSpec& spec, Method method, int repetition);
std::filesystem::path summary_path(const ExperimentSpec& spec, Method method);

/// Runs every (experiment, method, repetition) with up to `jobs` runs in
/// flight, then writes one summary per (experiment, method).
int run_experiments(const std::vector<ExperimentSpec>& specs, int jobs, std::ostream& log);

int run_command(const std::string& spec_path, const Overrides& overrides, int jobs, std::ostream& out,
                std::ostream& err);
int export_command(const std::vector<std::filesystem::path>& inputs, const std::filesystem::path& out_dir,
                   std::ostream& out, std::ostream& err);
int list_tasks_command(std::ostream& out);
int validate_spec_command(const std::string& spec_path, std::ostream& out, std::ostream& err);

}  // namespace cocabo::cli
