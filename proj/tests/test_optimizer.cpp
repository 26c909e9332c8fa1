#include <doctest.h>

#include "cocabo/optimizer.hpp"
#include "test_util.hpp"

using namespace cocabo;

namespace {

RunConfig small_config(int budget, int batch = 1) {
  RunConfig cfg;
  cfg.space = SearchSpace({3, 5}, Box::uniform(2, -1, 1));
  cfg.budget = budget;
  cfg.batch_size = batch;
  cfg.initial_design = 6;
  cfg.refit_period = 3;
  cfg.seed = 17;
  cfg.hyper.restarts = 3;
  return cfg;
}

double toy(const MixedPoint& z) { return -z.x.squaredNorm() + (z.h[0] == 1 ? 1.0 : 0.0) - 0.1 * z.h[1]; }

void check_identical(const RunHistory& a, const RunHistory& b) {
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].point == b.records[i].point);
    CHECK(a.records[i].value == b.records[i].value);
    CHECK(a.records[i].iteration == b.records[i].iteration);
  }
  REQUIRE(a.bandit_trace.size() == b.bandit_trace.size());
  for (std::size_t i = 0; i < a.bandit_trace.size(); ++i)
    for (std::size_t j = 0; j < a.bandit_trace[i].probabilities.size(); ++j)
      CHECK(a.bandit_trace[i].probabilities[j] == b.bandit_trace[i].probabilities[j]);
  CHECK(pack(a.final_params) == pack(b.final_params));
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("initial design") {
  const SearchSpace space({3}, Box::uniform(1, -1, 1));
  Rng rng(1);
  const auto one = initial_design(space, 1, rng);
  REQUIRE(one.size() == 1);
  CHECK(space.contains(one[0]));

  Eigen::Vector3d freq = Eigen::Vector3d::Zero();
  for (const auto& z : initial_design(space, 30000, rng)) freq[z.h[0]] += 1.0;
  CHECK((freq / 30000.0 - Eigen::Vector3d::Constant(1.0 / 3)).cwiseAbs().maxCoeff() < 0.01);

  Rng a(5), b(5);
  const auto da = initial_design(space, 10, a), db = initial_design(space, 10, b);
  for (int i = 0; i < 10; ++i) CHECK(da[static_cast<std::size_t>(i)] == db[static_cast<std::size_t>(i)]);
}

TEST_CASE("single iteration accounting") {
  const RunConfig cfg = small_config(1);
  const RunHistory h = run_sequential(cfg, toy);
  CHECK(h.records.size() == 7);
  CHECK_FALSE(h.aborted);
  CHECK(h.records.back().iteration == 1);
  CHECK(h.bandit_trace.size() == 1);
}

TEST_CASE("sequential run invariants") {
  const RunConfig cfg = small_config(8);
  const RunHistory h = run_sequential(cfg, toy);
  REQUIRE(h.records.size() == 14);
  double best = -1e300;
  for (std::size_t i = 0; i < h.records.size(); ++i) {
    const auto& r = h.records[i];
    CHECK(r.index == static_cast<int>(i));
    CHECK(cfg.space.contains(r.point));
    best = std::max(best, r.value);
    CHECK(r.best_so_far == best);
    CHECK(r.iteration == (i < 6 ? 0 : static_cast<int>(i) - 5));
  }
  REQUIRE(h.bandit_trace.size() == 8);
  for (const auto& snap : h.bandit_trace)
    for (const auto& p : snap.probabilities) CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
  const auto curve = h.best_per_iteration(8);
  CHECK(curve.size() == 8);
  CHECK(curve.back() == best);
}

TEST_CASE("same seed reproduces the run") {
  RunConfig cfg = small_config(6);
  cfg.lambda_mode = LambdaMode::Auto;
  check_identical(run_sequential(cfg, toy), run_sequential(cfg, toy));
}

TEST_CASE("batch of one is a sequential run") {
  const RunConfig cfg = small_config(5);
  check_identical(run_batch(cfg, toy), run_sequential(cfg, toy));
}

TEST_CASE("batch accounting") {
  const RunConfig cfg = small_config(4, 3);
  const RunHistory h = run_batch(cfg, toy);
  CHECK(h.records.size() == 6 + 4 * 3);
  for (int t = 1; t <= 4; ++t)
    CHECK(std::count_if(h.records.begin(), h.records.end(), [t](const auto& r) { return r.iteration == t; }) == 3);
}

TEST_CASE("constant objective") {
  const RunConfig cfg = small_config(6);
  const RunHistory h = run_sequential(cfg, [](const MixedPoint&) { return 2.5; });
  CHECK_FALSE(h.aborted);
  CHECK(h.records.size() == 12);
  for (const auto& r : h.records) CHECK(r.best_so_far == 2.5);
  for (const auto& e : h.events) CHECK(e.find("failed") == std::string::npos);
  for (const auto& p : h.bandit_trace.back().probabilities) CHECK(p.allFinite());
}

TEST_CASE("failing objective aborts with a partial history") {
  const RunConfig cfg = small_config(5);
  int calls = 0;
  const RunHistory h = run_sequential(cfg, [&](const MixedPoint& z) {
    if (++calls > 8) throw EvaluationError("child exited");
    return toy(z);
  });
  CHECK(h.aborted);
  CHECK(h.abort_reason == "child exited");
  CHECK(h.records.size() == 8);
  CHECK_FALSE(h.events.empty());
}

TEST_CASE("config validation") {
  RunConfig cfg = small_config(0);
  CHECK_THROWS_AS(run_sequential(cfg, toy), ContractViolation);
  cfg = small_config(3, 2);
  CHECK_THROWS_AS(run_sequential(cfg, toy), ContractViolation);
}

}
