#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cocabo/acquisition.hpp"
#include "cocabo/bandits.hpp"
#include "cocabo/gp.hpp"

namespace cocabo {

/// A distinct categorical vector of a batch and how often it occurs.
struct UniqueGroup {
  Eigen::VectorXi u;
  int count = 0;
};

/// Unique categorical vectors of H in first-appearance order.
std::vector<UniqueGroup> group_unique(const std::vector<Eigen::VectorXi>& H);

struct BeliefResult {
  std::vector<Eigen::VectorXd> xs;
  /// Posterior including the hallucinated observations.
  GpPosterior posterior;
};

/// Kriging Believer: `count` continuous points for categorical vector `u`,
/// each chosen on the posterior augmented with the previous picks at their
/// predicted mean. A pick within 1e-6 box widths of an entry of `taken`
/// (or an earlier pick) with the same `u` is nudged by 1e-3 box widths.
BeliefResult kriging_believer(const GpPosterior& post, const Eigen::VectorXi& u, int count, const Box& box,
                              const AcquisitionConfig& cfg, Rng& rng, std::span<const MixedPoint> taken = {});

/// Continuous completion of a categorical batch H: one Kriging Believer run
/// per unique group, hallucinations carried across groups.
std::vector<MixedPoint> assemble_batch(const GpPosterior& post, const std::vector<Eigen::VectorXi>& H, const Box& box,
                                       const AcquisitionConfig& cfg, Rng& rng);

/// Full batch step: categorical batch from the bandits, then assemble_batch.
std::vector<MixedPoint> select_batch(const GpPosterior& post, const MultiAgentState& bandits, int batch_size,
                                     const Box& box, const AcquisitionConfig& cfg, Rng& rng);

}  // namespace cocabo
