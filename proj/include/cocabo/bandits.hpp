#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "cocabo/random.hpp"

namespace cocabo {

/// EXP3 over N arms. Selection distribution
///   p_i = (1 - gamma) w_i / sum(w) + gamma / N
/// and importance-weighted update w_a <- w_a exp(gamma (r / p_a) / N).
struct Exp3State {
  Eigen::VectorXd weights;
  double gamma = 1.0;

  static Exp3State fresh(int arms, double gamma);
  int arms() const { return static_cast<int>(weights.size()); }
};

/// min(1, sqrt(N log N / ((e - 1) T))); 1 for a single arm.
double default_gamma(int arms, int horizon);

Eigen::VectorXd exp3_probabilities(const Exp3State& state);
int exp3_select(const Exp3State& state, Rng& rng);
/// `reward` must lie in [0, 1].
void exp3_update(Exp3State& state, int arm, double reward);

/// EXP3.M inclusion probabilities for b < N plays: weights above the
/// threshold are capped so that no arm exceeds probability one; the result
/// sums to b.
Eigen::VectorXd exp3m_inclusion_probabilities(const Exp3State& state, int plays);

/// Dependent rounding: returns the indices selected from marginals `p`
/// (each in [0, 1], summing to an integer k); exactly k indices come back
/// and index i is included with probability p_i.
std::vector<int> dependent_rounding(Eigen::VectorXd p, Rng& rng);

/// b arms for one round. For b < N they are distinct (capping + dependent
/// rounding); for b >= N every arm appears once and the remaining b - N are
/// drawn independently from the EXP3 distribution. Sorted ascending.
std::vector<int> exp3m_select(const Exp3State& state, int plays, Rng& rng);

/// Online min-max map of objective values onto [0, 1].
struct RewardNormaliser {
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;

  void observe(double value);
  /// 0.5 while the observed range is degenerate (no or constant data).
  double normalise(double value) const;
};

/// One EXP3 agent per categorical variable, coordinated by a joint reward.
struct MultiAgentState {
  std::vector<Exp3State> agents;
  RewardNormaliser normaliser;

  static MultiAgentState fresh(const std::vector<int>& choices, int horizon);
  std::vector<Eigen::VectorXd> probabilities() const;
};

Eigen::VectorXi multi_agent_select(const MultiAgentState& state, Rng& rng);

/// Folds `value` into the normaliser, then rewards arm h_j of every agent j
/// with the normalised value. Returns that reward.
double multi_agent_update(MultiAgentState& state, const Eigen::VectorXi& h, double value);

/// Categorical batch H_t: every agent plays EXP3.M with b plays, its picks
/// are shuffled, and the i-th batch entry takes each agent's i-th pick.
std::vector<Eigen::VectorXi> multi_agent_select_batch(const MultiAgentState& state, int batch_size, Rng& rng);

/// Draws an index from a probability vector.
int sample_discrete(const Eigen::VectorXd& p, Rng& rng);

}  // namespace cocabo
