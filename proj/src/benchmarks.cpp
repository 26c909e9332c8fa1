#include "cocabo/benchmarks.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "cocabo/batch.hpp"
#include "cocabo/errors.hpp"

namespace cocabo {

double beale(const Eigen::VectorXd& v) {
  const double x = v[0], y = v[1];
  const double a = 1.5 - x + x * y;
  const double b = 2.25 - x + x * y * y;
  const double c = 2.625 - x + x * y * y * y;
  return a * a + b * b + c * c;
}

double six_hump_camel(const Eigen::VectorXd& v) {
  const double x = v[0], y = v[1];
  return (4.0 - 2.1 * x * x + x * x * x * x / 3.0) * x * x + x * y + (-4.0 + 4.0 * y * y) * y * y;
}

double rosenbrock(const Eigen::VectorXd& v) {
  const double x = v[0], y = v[1];
  return 100.0 * (y - x * x) * (y - x * x) + (x - 1.0) * (x - 1.0);
}

double ackley(const Eigen::VectorXd& z) {
  constexpr double a = 20.0, b = 0.2, c = 2.0 * std::numbers::pi;
  const double n = static_cast<double>(z.size());
  const double sq = std::sqrt(z.squaredNorm() / n);
  const double cs = (c * z.array()).cos().sum() / n;
  return -a * std::exp(-b * sq) - std::exp(cs) + a + std::numbers::e;
}

namespace {

enum class Base { Ros, Cam, Bea };

double base(Base f, const Eigen::VectorXd& x) {
  switch (f) {
    case Base::Ros: return rosenbrock(x);
    case Base::Cam: return six_hump_camel(x);
    case Base::Bea: return beale(x);
  }
  return 0.0;
}

struct Term {
  double scale;
  Base f;
};

const std::vector<std::vector<Term>>& func_terms() {
  static const std::vector<std::vector<Term>> terms = {
      {{1, Base::Ros}, {1, Base::Cam}, {1, Base::Bea}},
      {{1, Base::Ros}, {1, Base::Cam}, {1, Base::Bea}, {1, Base::Bea}, {1, Base::Bea}},
      {{5, Base::Cam}, {2, Base::Ros}, {2, Base::Bea}, {3, Base::Bea}},
  };
  return terms;
}

double func_nc(int c, const Eigen::VectorXi& h, const Eigen::VectorXd& x) {
  require(h.size() == c, "wrong number of categorical inputs");
  require(x.size() == 2, "expects two continuous inputs");
  double total = 0.0;
  for (int j = 0; j < c; ++j) {
    const auto& row = func_terms()[static_cast<std::size_t>(j)];
    require(h[j] >= 0 && h[j] < static_cast<int>(row.size()), "categorical index out of range");
    const Term& t = row[static_cast<std::size_t>(h[j])];
    total += t.scale * base(t.f, x);
  }
  return -total;
}

}  // namespace

double func2c(const Eigen::VectorXi& h, const Eigen::VectorXd& x) { return func_nc(2, h, x); }
double func3c(const Eigen::VectorXi& h, const Eigen::VectorXd& x) { return func_nc(3, h, x); }

double ackley_cc(const Eigen::VectorXi& h, const Eigen::VectorXd& x) {
  require(x.size() == 1, "Ackley-cC has one continuous input");
  Eigen::VectorXd z(h.size() + 1);
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    require(h[i] >= 0 && h[i] < 17, "Ackley category index out of range");
    z[i] = ackley_category_value(h[i]);
  }
  z[h.size()] = x[0];
  return -ackley(z);
}

std::vector<std::string> synthetic_task_names() {
  return {"func2c", "func3c", "ackley2c", "ackley3c", "ackley4c", "ackley5c"};
}

SyntheticTask make_task(const std::string& name) {
  if (name == "func2c")
    return {name, SearchSpace({3, 5}, Box::uniform(2, -1.0, 1.0)),
            [](const MixedPoint& z) { return func2c(z.h, z.x); }};
  if (name == "func3c")
    return {name, SearchSpace({3, 5, 4}, Box::uniform(2, -1.0, 1.0)),
            [](const MixedPoint& z) { return func3c(z.h, z.x); }};
  for (int c = 2; c <= 5; ++c) {
    if (name == "ackley" + std::to_string(c) + "c")
      return {name, SearchSpace(std::vector<int>(static_cast<std::size_t>(c), 17), Box::uniform(1, -1.0, 1.0)),
              [](const MixedPoint& z) { return ackley_cc(z.h, z.x); }};
  }
  throw ContractViolation("unknown task '" + name + "'");
}

TaskOptimum grid_optimum(const SyntheticTask& task, int resolution) {
  require(resolution >= 2, "grid needs at least two points per axis");
  const SearchSpace& space = task.space;
  const int c = space.num_categorical();
  const int d = space.num_continuous();
  const Box& box = space.bounds();

  TaskOptimum best;
  best.value = -std::numeric_limits<double>::infinity();
  MixedPoint z{Eigen::VectorXi::Zero(c), Eigen::VectorXd(d)};
  Eigen::VectorXi grid_index(d);
  for (;;) {
    grid_index.setZero();
    for (;;) {
      for (int k = 0; k < d; ++k)
        z.x[k] = box.lower[k] + (box.upper[k] - box.lower[k]) * grid_index[k] / (resolution - 1.0);
      const double f = task.evaluate(z);
      if (f > best.value) best = {z.h, z.x, f};
      int k = d - 1;
      while (k >= 0 && ++grid_index[k] == resolution) grid_index[k--] = 0;
      if (k < 0) break;
    }
    int j = c - 1;
    while (j >= 0 && ++z.h[j] == space.choices()[static_cast<std::size_t>(j)]) z.h[j--] = 0;
    if (j < 0) break;
  }
  return best;
}

Eigen::VectorXd onehot_encode(const Eigen::VectorXi& h, const std::vector<int>& choices) {
  require(h.size() == static_cast<Eigen::Index>(choices.size()), "onehot_encode: wrong number of categories");
  int total = 0;
  for (int n : choices) total += n;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(total);
  int offset = 0;
  for (std::size_t j = 0; j < choices.size(); ++j) {
    const int value = h[static_cast<Eigen::Index>(j)];
    require(value >= 0 && value < choices[j], "onehot_encode: index out of range");
    v[offset + value] = 1.0;
    offset += choices[j];
  }
  return v;
}

Eigen::VectorXi onehot_decode(const Eigen::VectorXd& v, const std::vector<int>& choices) {
  Eigen::VectorXi h(static_cast<Eigen::Index>(choices.size()));
  int offset = 0;
  for (std::size_t j = 0; j < choices.size(); ++j) {
    require(offset + choices[j] <= v.size(), "onehot_decode: vector too short");
    Eigen::Index arg = 0;
    v.segment(offset, choices[j]).maxCoeff(&arg);
    h[static_cast<Eigen::Index>(j)] = static_cast<int>(arg);
    offset += choices[j];
  }
  return h;
}

RunHistory random_baseline(const RunConfig& cfg, const Objective& objective, RunObserver* observer) {
  cfg.validate();
  RunHistory history;
  RunRecorder recorder(history, observer);
  Dataset data;
  if (!evaluate_initial_design(cfg, objective, recorder, data)) return history;
  Rng rng = make_stream(cfg.seed, Stream::Baseline);
  for (int t = 1; t <= cfg.budget; ++t) {
    for (int i = 0; i < cfg.batch_size; ++i)
      if (!recorder.evaluate(objective, cfg.space.sample(rng), t)) return history;
  }
  return history;
}

namespace {

MixedPoint encode_point(const MixedPoint& z, const std::vector<int>& choices) {
  const Eigen::VectorXd code = onehot_encode(z.h, choices);
  MixedPoint e{Eigen::VectorXi(0), Eigen::VectorXd(z.x.size() + code.size())};
  e.x << z.x, code;
  return e;
}

Box relaxed_box(const SearchSpace& space) {
  int total = 0;
  for (int n : space.choices()) total += n;
  const int d = space.num_continuous();
  Box box{Eigen::VectorXd(d + total), Eigen::VectorXd(d + total)};
  box.lower << space.bounds().lower, Eigen::VectorXd::Zero(total);
  box.upper << space.bounds().upper, Eigen::VectorXd::Ones(total);
  return box;
}

MixedPoint decode_point(const Eigen::VectorXd& relaxed, const SearchSpace& space) {
  const int d = space.num_continuous();
  return {onehot_decode(relaxed.tail(relaxed.size() - d), space.choices()), relaxed.head(d)};
}

}  // namespace

RunHistory onehot_bo_baseline(const RunConfig& cfg, const Objective& objective, RunObserver* observer) {
  cfg.validate();
  RunHistory history;
  RunRecorder recorder(history, observer);
  const SearchSpace& space = cfg.space;
  const Box box = relaxed_box(space);
  const AcquisitionConfig acq = cfg.acquisition_config();
  Rng acq_rng = make_stream(cfg.seed, Stream::Acquisition);
  Rng hyper_rng = make_stream(cfg.seed, Stream::Hyperparameters);
  Rng fallback_rng = make_stream(cfg.seed, Stream::Fallback);

  GpParams params = GpParams::defaults(box.dim(), KernelForm::ContinuousOnly);
  history.final_params = params;

  Dataset mixed;
  if (!evaluate_initial_design(cfg, objective, recorder, mixed)) return history;
  Dataset encoded;
  for (std::size_t i = 0; i < mixed.size(); ++i) encoded.add(encode_point(mixed.point(i), space.choices()), mixed.value(i));

  const Eigen::VectorXi no_categories(0);
  for (int t = 1; t <= cfg.budget; ++t) {
    if ((t - 1) % cfg.refit_period == 0 && encoded.size() >= 2) {
      const HyperResult result = optimize_hyperparameters(encoded, params, cfg.hyper, hyper_rng);
      if (result.fell_back) recorder.event("iteration " + std::to_string(t) + ": every hyperparameter restart failed");
      params = result.params;
    }
    std::optional<GpPosterior> post = fit_or_report(encoded, params, recorder, t);

    std::vector<MixedPoint> proposals;
    for (int i = 0; i < cfg.batch_size; ++i) {
      if (!post) {
        proposals.push_back(space.sample(fallback_rng));
        continue;
      }
      const Eigen::VectorXd relaxed = maximize_acquisition(*post, no_categories, box, acq, acq_rng).x;
      MixedPoint z = decode_point(relaxed, space);
      if (i + 1 < cfg.batch_size) {
        const MixedPoint e = encode_point(z, space.choices());
        post = post->condition_on(e, post->predict(e).mean);
      }
      proposals.push_back(std::move(z));
    }
    for (const auto& z : proposals) {
      const auto f = recorder.evaluate(objective, z, t);
      if (!f) {
        history.final_params = params;
        return history;
      }
      encoded.add(encode_point(z, space.choices()), *f);
    }
  }
  history.final_params = params;
  return history;
}

double predictive_log_likelihood(const GpPosterior& post, const std::vector<MixedPoint>& points,
                                 const Eigen::VectorXd& values) {
  require(!points.empty() && static_cast<Eigen::Index>(points.size()) == values.size(),
          "predictive_log_likelihood: points and values differ in length");
  const double noise = post.params().noise_variance * post.transform().scale * post.transform().scale;
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Prediction p = post.predict(points[i]);
    const double var = p.variance + noise;
    const double r = values[static_cast<Eigen::Index>(i)] - p.mean;
    total += -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * r * r / var;
  }
  return total / static_cast<double>(points.size());
}

namespace {

void summarise(SurrogateScore& s) {
  std::vector<double> ok;
  for (double v : s.per_seed)
    if (std::isfinite(v)) ok.push_back(v);
  s.failures = static_cast<int>(s.per_seed.size() - ok.size());
  if (ok.empty()) {
    s.mean = s.standard_error = std::nan("");
    return;
  }
  const Eigen::Map<const Eigen::VectorXd> v(ok.data(), static_cast<Eigen::Index>(ok.size()));
  s.mean = v.mean();
  s.standard_error =
      ok.size() < 2 ? 0.0 : std::sqrt((v.array() - s.mean).square().sum() / (ok.size() - 1.0) / ok.size());
}

}  // namespace

SurrogateQuality surrogate_quality_experiment(const SyntheticTask& task, int n_train, int n_test, int seeds,
                                              std::uint64_t master_seed, const HyperOptions& options) {
  require(n_train >= 2 && n_test >= 1 && seeds >= 1, "surrogate experiment sizes must be positive");
  const SearchSpace& space = task.space;
  SurrogateQuality out;
  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(s));
    Rng sample_rng = make_stream(seed, Stream::InitialDesign);
    Dataset train, train_encoded;
    for (int i = 0; i < n_train; ++i) {
      const MixedPoint z = space.sample(sample_rng);
      const double f = task.evaluate(z);
      train.add(z, f);
      train_encoded.add(encode_point(z, space.choices()), f);
    }
    std::vector<MixedPoint> test, test_encoded;
    Eigen::VectorXd test_values(n_test);
    for (int i = 0; i < n_test; ++i) {
      test.push_back(space.sample(sample_rng));
      test_encoded.push_back(encode_point(test.back(), space.choices()));
      test_values[i] = task.evaluate(test.back());
    }

    auto score = [&](const Dataset& data, const std::vector<MixedPoint>& points, GpParams start, bool lambda) {
      try {
        HyperOptions opts = options;
        opts.optimise_lambda = lambda;
        Rng rng = make_stream(seed, Stream::Hyperparameters);
        const HyperResult fitted = optimize_hyperparameters(data, start, opts, rng);
        return predictive_log_likelihood(fit(data, fitted.params), points, test_values);
      } catch (const NumericalFault&) {
        return std::nan("");
      }
    };
    out.cocabo.per_seed.push_back(
        score(train, test, GpParams::defaults(space.num_continuous(), KernelForm::Mixture, 0.5), true));
    out.onehot.per_seed.push_back(score(train_encoded, test_encoded,
                                        GpParams::defaults(static_cast<int>(test_encoded.front().x.size()),
                                                           KernelForm::ContinuousOnly),
                                        false));
  }
  summarise(out.cocabo);
  summarise(out.onehot);
  return out;
}

}  // namespace cocabo
