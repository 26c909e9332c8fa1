#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cocabo/optimizer.hpp"

namespace cocabo::cli {

/// Identifies one run in its history header.
struct RunHeader {
  std::string label;   // task name or "external"
  std::string method;
  int repetition = 0;
  std::uint64_t master_seed = 0;
  std::uint64_t seed = 0;
  std::vector<int> categories;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  int budget = 0;
  int batch_size = 0;
  int initial_design = 0;
  int refit_period = 0;
  double kappa = 0.0;
};

RunHeader make_header(const std::string& label, const std::string& method, int repetition,
                      std::uint64_t master_seed, const RunConfig& cfg);

nlohmann::json params_to_json(const GpParams& p);
GpParams params_from_json(const nlohmann::json& j);

/// Streams a run to `<stem>.jsonl`, one record per line, flushed as each
/// record is written. Wall-clock times go to `<stem>.timing.csv` so the
/// history itself is reproducible byte for byte.
class HistoryWriter : public RunObserver {
 public:
  HistoryWriter(const std::filesystem::path& stem, const RunHeader& header);

  void on_evaluation(const EvaluationRecord& r) override;
  void on_bandit_snapshot(const BanditSnapshot& s) override;
  void on_event(const std::string& message) override;
  void finish(const RunHistory& history);

  static std::filesystem::path history_path(const std::filesystem::path& stem);
  static std::filesystem::path timing_path(const std::filesystem::path& stem);

 private:
  void write(const nlohmann::json& record);

  std::ofstream history_;
  std::ofstream timing_;
};

struct LoadedHistory {
  RunHeader header;
  RunHistory history;
  bool has_timing = false;
};

/// Reads a history file (and its timing sidecar when present). Throws
/// ContractViolation on malformed content.
LoadedHistory load_history(const std::filesystem::path& history_file);

/// One row per iteration: mean and standard error of best-so-far across runs.
void write_summary(const std::filesystem::path& file, const std::vector<std::vector<double>>& best_per_run);

struct ExportResult {
  int exported = 0;
  int skipped = 0;
};

/// Writes `evaluations.csv` and `bandit_trace.csv` into `out_dir` from every
/// `*.jsonl` history among `inputs` (files or directories, searched
/// recursively). Corrupt files are skipped with a warning on `log`.
ExportResult export_histories(const std::vector<std::filesystem::path>& inputs, const std::filesystem::path& out_dir,
                              std::ostream& log);

}  // namespace cocabo::cli
