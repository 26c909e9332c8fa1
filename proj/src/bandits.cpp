#include "cocabo/bandits.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "cocabo/errors.hpp"

namespace cocabo {

namespace {
constexpr double kOverflowGuard = 1e300;
constexpr double kRoundingTol = 1e-12;
}  // namespace

Exp3State Exp3State::fresh(int arms, double gamma) {
  require(arms >= 1, "EXP3 needs at least one arm");
  require(gamma > 0.0 && gamma <= 1.0, "EXP3 gamma must lie in (0, 1]");
  return Exp3State{Eigen::VectorXd::Ones(arms), gamma};
}

double default_gamma(int arms, int horizon) {
  require(arms >= 1 && horizon >= 1, "default_gamma needs positive arms and horizon");
  if (arms == 1) return 1.0;
  const double n = static_cast<double>(arms);
  return std::min(1.0, std::sqrt(n * std::log(n) / ((std::numbers::e - 1.0) * horizon)));
}

Eigen::VectorXd exp3_probabilities(const Exp3State& s) {
  const double n = static_cast<double>(s.arms());
  return (1.0 - s.gamma) * s.weights / s.weights.sum() + Eigen::VectorXd::Constant(s.arms(), s.gamma / n);
}

int sample_discrete(const Eigen::VectorXd& p, Rng& rng) {
  const double u = uniform01(rng) * p.sum();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return static_cast<int>(i);
  }
  // u landed on the rounding slack above the last cumulative sum.
  for (Eigen::Index i = p.size(); i-- > 0;)
    if (p[i] > 0.0) return static_cast<int>(i);
  return 0;
}

int exp3_select(const Exp3State& s, Rng& rng) { return sample_discrete(exp3_probabilities(s), rng); }

void exp3_update(Exp3State& s, int arm, double reward) {
  require(arm >= 0 && arm < s.arms(), "EXP3 arm index out of range");
  require(reward >= 0.0 && reward <= 1.0, "EXP3 reward must lie in [0, 1]");
  const double p = exp3_probabilities(s)[arm];
  const double estimate = reward / p;
  s.weights[arm] *= std::exp(s.gamma * estimate / s.arms());
  const double top = s.weights.maxCoeff();
  if (top > kOverflowGuard) s.weights /= top;
}

Eigen::VectorXd exp3m_inclusion_probabilities(const Exp3State& s, int plays) {
  const int n = s.arms();
  require(plays >= 1 && plays < n, "EXP3.M capping needs 1 <= plays < arms");
  const double k = plays;
  const double g = s.gamma;
  if (g >= 1.0) return Eigen::VectorXd::Constant(n, k / n);

  Eigen::VectorXd w = s.weights;
  const double cap_ratio = (1.0 / k - g / n) / (1.0 - g);
  if (w.maxCoeff() >= cap_ratio * w.sum()) {
    // Find alpha with alpha / (m alpha + sum of uncapped weights) = cap_ratio,
    // where the m largest weights are capped at alpha.
    std::vector<double> sorted(w.data(), w.data() + n);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double tail = std::accumulate(sorted.begin(), sorted.end(), 0.0);
    double alpha = sorted.front();
    for (int m = 1; m < plays; ++m) {
      tail -= sorted[static_cast<std::size_t>(m - 1)];
      if (1.0 - m * cap_ratio <= 0.0) break;
      alpha = cap_ratio * tail / (1.0 - m * cap_ratio);
      if (sorted[static_cast<std::size_t>(m)] <= alpha) break;
    }
    w = w.cwiseMin(alpha);
  }
  Eigen::VectorXd p = k * ((1.0 - g) * w / w.sum() + Eigen::VectorXd::Constant(n, g / n));
  return p.cwiseMin(1.0);
}

std::vector<int> dependent_rounding(Eigen::VectorXd p, Rng& rng) {
  auto snap = [](double& v) {
    if (v < kRoundingTol) v = 0.0;
    if (v > 1.0 - kRoundingTol) v = 1.0;
  };
  for (Eigen::Index i = 0; i < p.size(); ++i) snap(p[i]);

  for (;;) {
    Eigen::Index a = -1;
    Eigen::Index b = -1;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (p[i] > 0.0 && p[i] < 1.0) {
        if (a < 0) {
          a = i;
        } else {
          b = i;
          break;
        }
      }
    }
    if (a < 0) break;
    if (b < 0) {
      // Lone fractional entry left over from rounding error.
      p[a] = p[a] >= 0.5 ? 1.0 : 0.0;
      break;
    }
    const double up = std::min(1.0 - p[a], p[b]);
    const double down = std::min(p[a], 1.0 - p[b]);
    if (uniform01(rng) * (up + down) < down) {
      p[a] += up;
      p[b] -= up;
    } else {
      p[a] -= down;
      p[b] += down;
    }
    snap(p[a]);
    snap(p[b]);
  }
  std::vector<int> chosen;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] == 1.0) chosen.push_back(static_cast<int>(i));
  return chosen;
}

std::vector<int> exp3m_select(const Exp3State& s, int plays, Rng& rng) {
  require(plays >= 1, "EXP3.M needs at least one play");
  const int n = s.arms();
  if (plays == 1) return {exp3_select(s, rng)};
  std::vector<int> chosen;
  if (plays < n) {
    chosen = dependent_rounding(exp3m_inclusion_probabilities(s, plays), rng);
    if (static_cast<int>(chosen.size()) != plays)
      throw NumericalFault("dependent rounding returned the wrong number of arms");
    return chosen;
  }
  chosen.resize(static_cast<std::size_t>(n));
  std::iota(chosen.begin(), chosen.end(), 0);
  const Eigen::VectorXd p = exp3_probabilities(s);
  for (int extra = n; extra < plays; ++extra) chosen.push_back(sample_discrete(p, rng));
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

void RewardNormaliser::observe(double value) {
  if (count == 0) {
    min = max = value;
  } else {
    min = std::min(min, value);
    max = std::max(max, value);
  }
  ++count;
}

double RewardNormaliser::normalise(double value) const {
  if (count == 0 || !(max > min)) return 0.5;
  return std::clamp((value - min) / (max - min), 0.0, 1.0);
}

MultiAgentState MultiAgentState::fresh(const std::vector<int>& choices, int horizon) {
  MultiAgentState state;
  for (int n : choices) state.agents.push_back(Exp3State::fresh(n, default_gamma(n, horizon)));
  return state;
}

std::vector<Eigen::VectorXd> MultiAgentState::probabilities() const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(agents.size());
  for (const auto& a : agents) out.push_back(exp3_probabilities(a));
  return out;
}

Eigen::VectorXi multi_agent_select(const MultiAgentState& state, Rng& rng) {
  Eigen::VectorXi h(static_cast<Eigen::Index>(state.agents.size()));
  for (std::size_t j = 0; j < state.agents.size(); ++j)
    h[static_cast<Eigen::Index>(j)] = exp3_select(state.agents[j], rng);
  return h;
}

double multi_agent_update(MultiAgentState& state, const Eigen::VectorXi& h, double value) {
  require(h.size() == static_cast<Eigen::Index>(state.agents.size()), "one arm per agent expected");
  state.normaliser.observe(value);
  const double reward = state.normaliser.normalise(value);
  for (std::size_t j = 0; j < state.agents.size(); ++j)
    exp3_update(state.agents[j], h[static_cast<Eigen::Index>(j)], reward);
  return reward;
}

std::vector<Eigen::VectorXi> multi_agent_select_batch(const MultiAgentState& state, int batch_size, Rng& rng) {
  require(batch_size >= 1, "batch size must be positive");
  const auto c = static_cast<Eigen::Index>(state.agents.size());
  std::vector<Eigen::VectorXi> batch(static_cast<std::size_t>(batch_size), Eigen::VectorXi(c));
  for (Eigen::Index j = 0; j < c; ++j) {
    std::vector<int> picks = exp3m_select(state.agents[static_cast<std::size_t>(j)], batch_size, rng);
    // Fisher-Yates, so agents' picks are paired at random.
    for (std::size_t i = picks.size(); i > 1; --i)
      std::swap(picks[i - 1], picks[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(i)))]);
    for (int i = 0; i < batch_size; ++i) batch[static_cast<std::size_t>(i)][j] = picks[static_cast<std::size_t>(i)];
  }
  return batch;
}

}  // namespace cocabo
