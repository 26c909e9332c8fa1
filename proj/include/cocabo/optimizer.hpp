#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cocabo/acquisition.hpp"
#include "cocabo/bandits.hpp"
#include "cocabo/gp.hpp"
#include "cocabo/space.hpp"

namespace cocabo {

/// The four CoCaBO variants: lambda fixed at 0, 0.5, 1 or learnt.
enum class LambdaMode { Zero, Half, One, Auto };

double initial_lambda(LambdaMode mode);

struct RunConfig {
  SearchSpace space;
  int budget = 1;
  int batch_size = 1;
  LambdaMode lambda_mode = LambdaMode::Half;
  int initial_design = 24;
  int refit_period = 10;
  double kappa = 2.0;
  std::uint64_t seed = 0;
  /// kappa is taken from the field above.
  AcquisitionConfig acquisition;
  HyperOptions hyper;

  void validate() const;
  AcquisitionConfig acquisition_config() const;
};

/// Black-box objective (maximised). Throws EvaluationError on failure.
using Objective = std::function<double(const MixedPoint&)>;

struct EvaluationRecord {
  int iteration = 0;  // 0 for the initial design
  int index = 0;      // evaluation counter
  MixedPoint point;
  double value = 0.0;
  double best_so_far = 0.0;
  double wall_time_s = 0.0;
};

/// Per-agent selection probabilities in force at an iteration.
struct BanditSnapshot {
  int iteration = 0;
  std::vector<Eigen::VectorXd> probabilities;
};

struct RunHistory {
  std::vector<EvaluationRecord> records;
  std::vector<BanditSnapshot> bandit_trace;
  GpParams final_params;
  std::vector<std::string> events;
  bool aborted = false;
  std::string abort_reason;

  Dataset dataset() const;
  /// Best-so-far after iterations 1..budget; runs that stopped early repeat
  /// their last value.
  std::vector<double> best_per_iteration(int budget) const;
};

/// Instrumentation hooks; every method has a no-op default.
class RunObserver {
 public:
  virtual ~RunObserver() = default;
  virtual void on_evaluation(const EvaluationRecord&) {}
  virtual void on_bandit_snapshot(const BanditSnapshot&) {}
  virtual void on_bandit_update(int /*iteration*/, int /*agent*/, int /*arm*/, double /*reward*/) {}
  virtual void on_event(const std::string&) {}
};

/// Evaluates points and keeps a RunHistory (and an optional observer) up to
/// date. Shared by the CoCaBO loops and the baselines.
class RunRecorder {
 public:
  RunRecorder(RunHistory& history, RunObserver* observer);

  /// Evaluates z; returns nullopt and marks the run aborted on failure.
  std::optional<double> evaluate(const Objective& objective, const MixedPoint& z, int iteration);
  void snapshot(int iteration, std::vector<Eigen::VectorXd> probabilities);
  void bandit_update(int iteration, int agent, int arm, double reward);
  void event(const std::string& message);

 private:
  RunHistory& history_;
  RunObserver* observer_;
  std::chrono::steady_clock::time_point start_;
};

/// Uniform draws: categories uniform over their choices, x uniform in the box.
std::vector<MixedPoint> initial_design(const SearchSpace& space, int count, Rng& rng);

/// Evaluates the initial design of `cfg` into `data`; false if aborted.
bool evaluate_initial_design(const RunConfig& cfg, const Objective& objective, RunRecorder& recorder, Dataset& data,
                             RewardNormaliser* normaliser = nullptr);

/// Fits the posterior, retrying once with doubled jitter after a numerical
/// fault; nullopt (and an event) if that also fails.
std::optional<GpPosterior> fit_or_report(const Dataset& data, const GpParams& params, RunRecorder& recorder,
                                         int iteration);

/// Sequential CoCaBO: bandits pick h, UCB picks x given h.
RunHistory run_sequential(const RunConfig& cfg, const Objective& objective, RunObserver* observer = nullptr);

/// Batch CoCaBO: EXP3.M categorical batch completed by Kriging Believer.
RunHistory run_batch(const RunConfig& cfg, const Objective& objective, RunObserver* observer = nullptr);

}  // namespace cocabo
