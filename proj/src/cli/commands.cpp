#include "cocabo/cli/commands.hpp"

#include <atomic>
#include <mutex>
#include <thread>

#include "cocabo/benchmarks.hpp"
#include "cocabo/cli/external_objective.hpp"
#include "cocabo/cli/history.hpp"
#include "cocabo/errors.hpp"

namespace cocabo::cli {

namespace fs = std::filesystem;

fs::path run_stem(const ExperimentSpec& spec, Method method, int repetition) {
  return fs::path(spec.out) / (spec.label() + "_" + to_string(method) + "_rep" + std::to_string(repetition));
}

fs::path summary_path(const ExperimentSpec& spec, Method method) {
  return fs::path(spec.out) / (spec.label() + "_" + to_string(method) + "_summary.csv");
}

namespace {

struct Job {
  std::size_t spec;
  Method method;
  int repetition;
};

RunHistory execute(Method method, const RunConfig& cfg, const Objective& objective, RunObserver* observer) {
  switch (method) {
    case Method::Random: return random_baseline(cfg, objective, observer);
    case Method::OnehotBo: return onehot_bo_baseline(cfg, objective, observer);
    default:
      return cfg.batch_size == 1 ? run_sequential(cfg, objective, observer) : run_batch(cfg, objective, observer);
  }
}

}  // namespace

int run_experiments(const std::vector<ExperimentSpec>& specs, int jobs, std::ostream& log) {
  require(jobs >= 1, "--jobs must be at least 1");
  std::vector<Job> queue;
  for (std::size_t s = 0; s < specs.size(); ++s)
    for (Method m : specs[s].methods)
      for (int r = 0; r < specs[s].repetitions; ++r) queue.push_back({s, m, r});

  std::vector<std::vector<double>> best(queue.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> any_aborted{false};
  std::mutex log_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < queue.size(); i = next++) {
      const Job& job = queue[i];
      const ExperimentSpec& spec = specs[job.spec];
      const RunConfig cfg = spec.run_config(job.method, job.repetition);
      const fs::path stem = run_stem(spec, job.method, job.repetition);
      RunHistory history;
      try {
        HistoryWriter writer(stem, make_header(spec.label(), to_string(job.method), job.repetition, spec.seed, cfg));
        if (spec.task) {
          history = execute(job.method, cfg, make_task(*spec.task).evaluate, &writer);
        } else {
          std::unique_ptr<ExternalObjective> external;
          Objective objective = [&](const MixedPoint& z) {
            if (!external) external = std::make_unique<ExternalObjective>(spec.external->command, spec.external->timeout_s);
            return (*external)(z);
          };
          history = execute(job.method, cfg, objective, &writer);
        }
        writer.finish(history);
      } catch (const std::exception& e) {
        history.aborted = true;
        history.abort_reason = e.what();
      }
      best[i] = history.best_per_iteration(cfg.budget);
      if (history.aborted) any_aborted = true;
      std::lock_guard lock(log_mutex);
      log << stem.string() << ".jsonl: " << history.records.size() << " evaluations";
      if (history.aborted) log << " (aborted: " << history.abort_reason << ")";
      log << '\n';
    }
  };

  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), queue.size());
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();

  for (std::size_t s = 0; s < specs.size(); ++s) {
    for (Method m : specs[s].methods) {
      std::vector<std::vector<double>> runs;
      for (std::size_t i = 0; i < queue.size(); ++i)
        if (queue[i].spec == s && queue[i].method == m) runs.push_back(best[i]);
      write_summary(summary_path(specs[s], m), runs);
    }
  }
  return any_aborted ? kExitAborted : kExitOk;
}

int run_command(const std::string& spec_path, const Overrides& overrides, int jobs, std::ostream& out,
                std::ostream& err) {
  std::vector<ExperimentSpec> specs;
  try {
    specs = load_spec_file(spec_path);
    for (auto& s : specs) apply_overrides(s, overrides);
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    return run_experiments(specs, jobs, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

int export_command(const std::vector<fs::path>& inputs, const fs::path& out_dir, std::ostream& out,
                   std::ostream& err) {
  try {
    const ExportResult r = export_histories(inputs, out_dir, err);
    out << "exported " << r.exported << " run(s) to " << out_dir.string();
    if (r.skipped) out << ", skipped " << r.skipped;
    out << '\n';
    if (r.exported == 0) {
      err << "error: no valid history files found\n";
      return kExitNothing;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

int list_tasks_command(std::ostream& out) {
  for (const auto& name : synthetic_task_names()) {
    const SyntheticTask task = make_task(name);
    out << name << "  categories=[";
    for (std::size_t j = 0; j < task.space.choices().size(); ++j)
      out << (j ? "," : "") << task.space.choices()[j];
    out << "]  continuous=" << task.space.num_continuous() << "  combinations=" << task.space.combinations() << '\n';
  }
  out << "methods:";
  for (Method m : all_methods()) out << ' ' << to_string(m);
  out << '\n';
  return kExitOk;
}

int validate_spec_command(const std::string& spec_path, std::ostream& out, std::ostream& err) {
  try {
    const auto specs = load_spec_file(spec_path);
    for (const auto& s : specs) out << spec_to_line(s) << '\n';
    return kExitOk;
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace cocabo::cli
