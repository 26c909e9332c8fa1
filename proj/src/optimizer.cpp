#include "cocabo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "cocabo/batch.hpp"
#include "cocabo/errors.hpp"

namespace cocabo {

double initial_lambda(LambdaMode mode) {
  switch (mode) {
    case LambdaMode::Zero: return 0.0;
    case LambdaMode::Half: return 0.5;
    case LambdaMode::One: return 1.0;
    case LambdaMode::Auto: return 0.5;
  }
  return 0.5;
}

void RunConfig::validate() const {
  require(budget >= 1, "budget must be at least 1");
  require(batch_size >= 1, "batch size must be at least 1");
  require(initial_design >= 1, "initial design needs at least one point");
  require(refit_period >= 1, "refit period must be at least 1");
  require(space.num_continuous() >= 1, "search space is not initialised");
  acquisition_config().validate();
}

AcquisitionConfig RunConfig::acquisition_config() const {
  AcquisitionConfig a = acquisition;
  a.kappa = kappa;
  return a;
}

Dataset RunHistory::dataset() const {
  Dataset d;
  for (const auto& r : records) d.add(r.point, r.value);
  return d;
}

std::vector<double> RunHistory::best_per_iteration(int budget) const {
  std::vector<double> out(static_cast<std::size_t>(budget), std::nan(""));
  double best = -std::numeric_limits<double>::infinity();
  std::size_t r = 0;
  for (int t = 0; t <= budget; ++t) {
    while (r < records.size() && records[r].iteration <= t) best = std::max(best, records[r++].value);
    if (t >= 1) out[static_cast<std::size_t>(t - 1)] = best;
  }
  return out;
}

RunRecorder::RunRecorder(RunHistory& history, RunObserver* observer)
    : history_(history), observer_(observer), start_(std::chrono::steady_clock::now()) {}

std::optional<double> RunRecorder::evaluate(const Objective& objective, const MixedPoint& z, int iteration) {
  double value = 0.0;
  try {
    value = objective(z);
    if (!std::isfinite(value)) throw EvaluationError("objective returned a non-finite value");
  } catch (const std::exception& e) {
    history_.aborted = true;
    history_.abort_reason = e.what();
    event("run aborted at iteration " + std::to_string(iteration) + ": " + e.what());
    return std::nullopt;
  }
  EvaluationRecord rec;
  rec.iteration = iteration;
  rec.index = static_cast<int>(history_.records.size());
  rec.point = z;
  rec.value = value;
  rec.best_so_far = history_.records.empty() ? value : std::max(history_.records.back().best_so_far, value);
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  history_.records.push_back(rec);
  if (observer_) observer_->on_evaluation(history_.records.back());
  return value;
}

void RunRecorder::snapshot(int iteration, std::vector<Eigen::VectorXd> probabilities) {
  history_.bandit_trace.push_back({iteration, std::move(probabilities)});
  if (observer_) observer_->on_bandit_snapshot(history_.bandit_trace.back());
}

void RunRecorder::bandit_update(int iteration, int agent, int arm, double reward) {
  if (observer_) observer_->on_bandit_update(iteration, agent, arm, reward);
}

void RunRecorder::event(const std::string& message) {
  history_.events.push_back(message);
  if (observer_) observer_->on_event(message);
}

std::vector<MixedPoint> initial_design(const SearchSpace& space, int count, Rng& rng) {
  require(count >= 1, "initial design needs at least one point");
  std::vector<MixedPoint> design;
  design.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) design.push_back(space.sample(rng));
  return design;
}

bool evaluate_initial_design(const RunConfig& cfg, const Objective& objective, RunRecorder& recorder, Dataset& data,
                             RewardNormaliser* normaliser) {
  Rng rng = make_stream(cfg.seed, Stream::InitialDesign);
  for (const auto& z : initial_design(cfg.space, cfg.initial_design, rng)) {
    const auto f = recorder.evaluate(objective, z, 0);
    if (!f) return false;
    data.add(z, *f);
    if (normaliser) normaliser->observe(*f);
  }
  return true;
}

std::optional<GpPosterior> fit_or_report(const Dataset& data, const GpParams& params, RunRecorder& recorder,
                                         int iteration) {
  try {
    return fit(data, params);
  } catch (const NumericalFault&) {
  }
  // The first attempt escalated jitter to 1e-6 * 2^10 of the mean diagonal.
  const double diag = params.form == KernelForm::Mixture
                          ? mix(params.mixture.categorical.variance, params.mixture.continuous.variance,
                                params.mixture.lambda)
                          : params.mixture.continuous.variance;
  const double retry_jitter = 2.0 * 1e-6 * 1024.0 * (diag + params.noise_variance);
  try {
    auto post = fit(data, params, TargetTransform::standardise(data.values()), retry_jitter);
    recorder.event("iteration " + std::to_string(iteration) + ": refit needed doubled jitter");
    return post;
  } catch (const NumericalFault&) {
    recorder.event("iteration " + std::to_string(iteration) + ": GP fit failed, proposing random points");
    return std::nullopt;
  }
}

namespace {

GpParams refit(const RunConfig& cfg, const Dataset& data, const GpParams& params, RunRecorder& recorder, Rng& rng,
               int iteration) {
  if (data.size() < 2) return params;
  HyperOptions opts = cfg.hyper;
  opts.optimise_lambda = cfg.lambda_mode == LambdaMode::Auto;
  const HyperResult result = optimize_hyperparameters(data, params, opts, rng);
  if (result.fell_back)
    recorder.event("iteration " + std::to_string(iteration) + ": every hyperparameter restart failed");
  return result.params;
}

RunHistory run_cocabo(const RunConfig& cfg, const Objective& objective, RunObserver* observer, bool batched) {
  cfg.validate();
  RunHistory history;
  RunRecorder recorder(history, observer);

  const SearchSpace& space = cfg.space;
  const Box& box = space.bounds();
  const AcquisitionConfig acq = cfg.acquisition_config();
  Rng bandit_rng = make_stream(cfg.seed, Stream::Bandit);
  Rng acq_rng = make_stream(cfg.seed, Stream::Acquisition);
  Rng hyper_rng = make_stream(cfg.seed, Stream::Hyperparameters);
  Rng fallback_rng = make_stream(cfg.seed, Stream::Fallback);

  MultiAgentState bandits = MultiAgentState::fresh(space.choices(), cfg.budget * cfg.batch_size);
  GpParams params = GpParams::defaults(space.num_continuous(), KernelForm::Mixture, initial_lambda(cfg.lambda_mode));
  history.final_params = params;

  Dataset data;
  if (!evaluate_initial_design(cfg, objective, recorder, data, &bandits.normaliser)) return history;

  for (int t = 1; t <= cfg.budget; ++t) {
    recorder.snapshot(t, bandits.probabilities());
    if ((t - 1) % cfg.refit_period == 0) params = refit(cfg, data, params, recorder, hyper_rng, t);
    const std::optional<GpPosterior> post = fit_or_report(data, params, recorder, t);

    std::vector<MixedPoint> proposals;
    if (!batched) {
      const Eigen::VectorXi h = multi_agent_select(bandits, bandit_rng);
      Eigen::VectorXd x = post ? maximize_acquisition(*post, h, box, acq, acq_rng).x : space.sample(fallback_rng).x;
      proposals.push_back({h, std::move(x)});
    } else {
      const auto H = multi_agent_select_batch(bandits, cfg.batch_size, bandit_rng);
      if (post) {
        proposals = assemble_batch(*post, H, box, acq, acq_rng);
      } else {
        for (const auto& h : H) proposals.push_back({h, space.sample(fallback_rng).x});
      }
    }

    std::vector<double> values;
    for (const auto& z : proposals) {
      const auto f = recorder.evaluate(objective, z, t);
      if (!f) {
        history.final_params = params;
        return history;
      }
      data.add(z, *f);
      values.push_back(*f);
    }
    for (std::size_t i = 0; i < proposals.size(); ++i) {
      const double reward = multi_agent_update(bandits, proposals[i].h, values[i]);
      for (Eigen::Index j = 0; j < proposals[i].h.size(); ++j)
        recorder.bandit_update(t, static_cast<int>(j), proposals[i].h[j], reward);
    }
  }
  history.final_params = params;
  return history;
}

}  // namespace

RunHistory run_sequential(const RunConfig& cfg, const Objective& objective, RunObserver* observer) {
  require(cfg.batch_size == 1, "run_sequential expects batch_size 1; use run_batch");
  return run_cocabo(cfg, objective, observer, false);
}

RunHistory run_batch(const RunConfig& cfg, const Objective& objective, RunObserver* observer) {
  // A batch of one is a sequential step, draw for draw.
  return run_cocabo(cfg, objective, observer, cfg.batch_size > 1);
}

}  // namespace cocabo
