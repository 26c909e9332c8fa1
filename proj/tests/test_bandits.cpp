#include <doctest.h>

#include <cmath>
#include <map>

#include "cocabo/bandits.hpp"
#include "test_util.hpp"

using namespace cocabo;

namespace {

bool bernoulli(double mean, Rng& rng) { return uniform01(rng) < mean; }

// Mean cumulative pseudo-regret of single-agent EXP3.
double exp3_regret(const std::vector<double>& means, int horizon, int seeds) {
  const double best = *std::max_element(means.begin(), means.end());
  const int n = static_cast<int>(means.size());
  double total = 0.0;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(derive_seed(2024, static_cast<std::uint64_t>(s)));
    Exp3State state = Exp3State::fresh(n, default_gamma(n, horizon));
    for (int t = 0; t < horizon; ++t) {
      const int a = exp3_select(state, rng);
      total += best - means[static_cast<std::size_t>(a)];
      exp3_update(state, a, bernoulli(means[static_cast<std::size_t>(a)], rng) ? 1.0 : 0.0);
    }
  }
  return total / seeds;
}

}  // namespace

TEST_SUITE("bandits") {

TEST_CASE("gamma schedule") {
  CHECK(default_gamma(5, 1) == 1.0);
  CHECK(default_gamma(1, 100) == 1.0);
  CHECK(default_gamma(5, 2000) == doctest::Approx(std::sqrt(5 * std::log(5.0) / ((std::exp(1.0) - 1) * 2000))));
}

TEST_CASE("fresh state is uniform") {
  for (double g : {1.0, 0.3, 0.01}) {
    const Eigen::VectorXd p = exp3_probabilities(Exp3State::fresh(4, g));
    CHECK((p.array() - 0.25).abs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("zero reward leaves the weights alone") {
  Exp3State s = Exp3State::fresh(3, 0.2);
  exp3_update(s, 1, 0.0);
  CHECK(s.weights == Eigen::VectorXd::Ones(3));
  CHECK_THROWS_AS(exp3_update(s, 1, 1.5), ContractViolation);
  CHECK_THROWS_AS(exp3_update(s, 1, -0.1), ContractViolation);
  CHECK_THROWS_AS(exp3_update(s, 3, 0.5), ContractViolation);
}

TEST_CASE("rewarded arm dominates selection") {
  Exp3State s = Exp3State::fresh(5, 0.1);
  for (int i = 0; i < 1000; ++i) exp3_update(s, 3, 1.0);
  Rng rng(1);
  int hits = 0;
  for (int i = 0; i < 10000; ++i) hits += exp3_select(s, rng) == 3;
  CHECK(hits / 10000.0 > 0.9);
}

TEST_CASE("regret on a two-armed Bernoulli bandit") {
  const int T = 2000;
  const double bound = 2.63 * std::sqrt(T * 2 * std::log(2.0));
  CHECK(exp3_regret({0.9, 0.1}, T, 50) <= bound);
}

TEST_CASE("reward normaliser") {
  RewardNormaliser n;
  n.observe(-3.0);
  CHECK(n.normalise(-3.0) == 0.5);
  n.observe(1.0);
  CHECK(n.normalise(1.0) == 1.0);
  CHECK(n.normalise(-3.0) == 0.0);
  CHECK(n.normalise(0.0) == doctest::Approx(0.75));
  n.observe(5.0);
  CHECK(n.normalise(5.0) == 1.0);
}

TEST_CASE("single agent reduces to plain EXP3") {
  MultiAgentState m = MultiAgentState::fresh({4}, 100);
  m.agents[0].weights << 1, 5, 2, 0.5;
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) CHECK(multi_agent_select(m, a)[0] == exp3_select(m.agents[0], b));
}

TEST_CASE("fresh agents give uniform joint selections") {
  const MultiAgentState m = MultiAgentState::fresh({3, 5}, 200);
  Rng rng(8);
  std::map<std::pair<int, int>, int> counts;
  const int draws = 30000;
  for (int i = 0; i < draws; ++i) {
    const Eigen::VectorXi h = multi_agent_select(m, rng);
    ++counts[{h[0], h[1]}];
  }
  CHECK(counts.size() == 15);
  for (const auto& [key, c] : counts) CHECK(std::abs(c / double(draws) - 1.0 / 15) < 0.01);
}

TEST_CASE("agents learn a peaked joint reward") {
  const Eigen::Vector3i target(2, 0, 3);
  MultiAgentState m = MultiAgentState::fresh({3, 5, 4}, 3000);
  Rng rng(9);
  for (int t = 0; t < 3000; ++t) {
    const Eigen::VectorXi h = multi_agent_select(m, rng);
    multi_agent_update(m, h, -static_cast<double>((h.array() != target.array()).count()));
  }
  std::map<std::vector<int>, int> counts;
  for (int i = 0; i < 10000; ++i) {
    const Eigen::VectorXi h = multi_agent_select(m, rng);
    ++counts[{h[0], h[1], h[2]}];
  }
  const auto modal = std::max_element(counts.begin(), counts.end(),
                                      [](const auto& a, const auto& b) { return a.second < b.second; });
  CHECK(modal->first == std::vector<int>{2, 0, 3});
}

TEST_CASE("EXP3.M inclusion probabilities") {
  Exp3State s = Exp3State::fresh(5, 0.2);
  CHECK((exp3m_inclusion_probabilities(s, 2).array() - 0.4).abs().maxCoeff() < 1e-12);

  s.weights << 1000, 1, 1, 1, 1;
  const Eigen::VectorXd p = exp3m_inclusion_probabilities(s, 2);
  CHECK(p.sum() == doctest::Approx(2.0));
  CHECK(p.maxCoeff() <= 1.0);
  CHECK(p[0] == doctest::Approx(1.0));

  s.weights << 3, 1, 2, 1, 0.5;
  const Eigen::VectorXd one = exp3m_inclusion_probabilities(s, 1);
  CHECK((one - exp3_probabilities(s)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dependent rounding keeps marginals and cardinality") {
  Eigen::VectorXd p(5);
  p << 0.9, 0.5, 0.3, 0.2, 0.1;
  Rng rng(10);
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(5);
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    const auto picks = dependent_rounding(p, rng);
    REQUIRE(picks.size() == 2);
    CHECK(picks[0] != picks[1]);
    for (int k : picks) freq[k] += 1.0;
  }
  freq /= draws;
  CHECK((freq - p).cwiseAbs().maxCoeff() < 0.015);
}

TEST_CASE("EXP3.M selection") {
  Exp3State s = Exp3State::fresh(5, 0.3);
  Rng rng(11);
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(5);
  for (int i = 0; i < 10000; ++i) {
    const auto picks = exp3m_select(s, 2, rng);
    REQUIRE(picks.size() == 2);
    CHECK(picks[0] < picks[1]);
    for (int k : picks) freq[k] += 1.0;
  }
  CHECK((freq / 10000.0 - Eigen::VectorXd::Constant(5, 0.4)).cwiseAbs().maxCoeff() < 0.02);

  CHECK(exp3m_select(s, 5, rng) == std::vector<int>{0, 1, 2, 3, 4});
  const auto seven = exp3m_select(s, 7, rng);
  CHECK(seven.size() == 7);
  for (int k = 0; k < 5; ++k) CHECK(std::count(seven.begin(), seven.end(), k) >= 1);

  s.weights << 3, 1, 2, 1, 0.5;
  Rng a(12), b(12);
  Eigen::VectorXd single = Eigen::VectorXd::Zero(5), plain = Eigen::VectorXd::Zero(5);
  for (int i = 0; i < 20000; ++i) {
    single[exp3m_select(s, 1, a)[0]] += 1.0;
    plain[exp3_select(s, b)] += 1.0;
  }
  CHECK((single - plain).cwiseAbs().maxCoeff() / 20000.0 < 0.015);
}

TEST_CASE("multi-agent batch") {
  const MultiAgentState m = MultiAgentState::fresh({3, 5, 2}, 50);
  Rng rng(13);
  for (int rep = 0; rep < 50; ++rep) {
    const auto batch = multi_agent_select_batch(m, 3, rng);
    REQUIRE(batch.size() == 3);
    for (int j = 0; j < 2; ++j) {
      std::vector<int> col;
      for (const auto& h : batch) col.push_back(h[j]);
      std::sort(col.begin(), col.end());
      CHECK(std::adjacent_find(col.begin(), col.end()) == col.end());
    }
    for (const auto& h : batch) CHECK((h[2] == 0 || h[2] == 1));
  }
}

}
