#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "cocabo/gp.hpp"
#include "cocabo/random.hpp"
#include "cocabo/space.hpp"

namespace cocabo::testing {

inline MixedPoint point(std::initializer_list<int> h, std::initializer_list<double> x) {
  MixedPoint z;
  z.h = Eigen::VectorXi(static_cast<Eigen::Index>(h.size()));
  z.x = Eigen::VectorXd(static_cast<Eigen::Index>(x.size()));
  Eigen::Index i = 0;
  for (int v : h) z.h[i++] = v;
  i = 0;
  for (double v : x) z.x[i++] = v;
  return z;
}

inline std::vector<MixedPoint> sample_points(const SearchSpace& space, int n, Rng& rng) {
  std::vector<MixedPoint> pts;
  for (int i = 0; i < n; ++i) pts.push_back(space.sample(rng));
  return pts;
}

/// Random mixture hyperparameters in a moderate range.
inline GpParams random_params(int dim, Rng& rng, KernelForm form = KernelForm::Mixture) {
  GpParams p = GpParams::defaults(dim, form);
  for (int k = 0; k < dim; ++k) p.mixture.continuous.lengthscales[k] = std::exp(uniform(rng, std::log(0.1), std::log(3.0)));
  p.mixture.continuous.variance = std::exp(uniform(rng, std::log(0.3), std::log(3.0)));
  p.mixture.categorical.variance = std::exp(uniform(rng, std::log(0.3), std::log(3.0)));
  p.mixture.lambda = uniform(rng, 0.05, 0.95);
  p.noise_variance = std::exp(uniform(rng, std::log(1e-3), std::log(0.1)));
  return p;
}

/// |a - b| relative to the larger magnitude, floored so that partials that
/// are zero up to rounding compare absolutely.
inline double relative_error(double a, double b, double floor = 1e-4) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double min_eigenvalue(const Eigen::MatrixXd& K) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

}  // namespace cocabo::testing
