#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cocabo/gp.hpp"
#include "cocabo/random.hpp"
#include "cocabo/space.hpp"

namespace cocabo {

struct AcquisitionConfig {
  double kappa = 2.0;
  int restarts = 10;
  int local_steps = 50;
  int raw_samples = 2000;

  void validate() const;
};

inline double ucb(double mean, double variance, double kappa) { return mean + kappa * std::sqrt(variance); }

/// UCB at the rows of X for a fixed categorical vector.
Eigen::VectorXd ucb_batch(const GpPosterior& post, const Eigen::VectorXi& h, const Eigen::MatrixXd& X, double kappa);

/// `count` randomly shifted Halton points in `box`, one per row.
Eigen::MatrixXd halton_points(int count, const Box& box, Rng& rng);

struct AcquisitionResult {
  Eigen::VectorXd x;
  double value = 0.0;
  /// Acquisition value at every local-ascent start.
  std::vector<double> start_values;
};

/// argmax over `box` of UCB(x | h fixed): score raw_samples quasi-random
/// points, then run projected ascent with central-difference gradients
/// (step 1e-4 * box width) from the best `restarts` of them.
AcquisitionResult maximize_acquisition(const GpPosterior& post, const Eigen::VectorXi& h, const Box& box,
                                       const AcquisitionConfig& cfg, Rng& rng);

}  // namespace cocabo
