#include "cocabo/kernels.hpp"

#include <algorithm>

namespace cocabo {

void ContinuousKernelParams::validate(int dim) const {
  require(lengthscales.size() == dim, "lengthscale count does not match the continuous dimension");
  require((lengthscales.array() > 0.0).all(), "lengthscales must be positive");
  require(variance > 0.0, "continuous kernel variance must be positive");
}

void CategoricalKernelParams::validate() const {
  require(variance > 0.0, "categorical kernel variance must be positive");
}

void MixtureParams::validate(int dim) const {
  continuous.validate(dim);
  categorical.validate();
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
}

double cocabo_kernel(const MixedPoint& a, const MixedPoint& b, const MixtureParams& p) {
  const double kh = categorical_overlap(a.h, b.h, p.categorical);
  const double kx = matern52(a.x, b.x, p.continuous);
  return mix(kh, kx, p.lambda);
}

Eigen::MatrixXd kernel_matrix(std::span<const MixedPoint> points, const MixtureParams& p, double noise) {
  require(!points.empty(), "kernel_matrix needs at least one point");
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = cocabo_kernel(points[i], points[i], p) + noise;
    for (Eigen::Index j = 0; j < i; ++j) {
      K(i, j) = cocabo_kernel(points[i], points[j], p);
      K(j, i) = K(i, j);
    }
  }
  if (!K.allFinite()) throw NumericalFault("kernel matrix has non-finite entries");
  return K;
}

KernelGradient kernel_param_gradients(const MixedPoint& a, const MixedPoint& b, const MixtureParams& p) {
  const auto& ls = p.continuous.lengthscales;
  require(a.x.size() == ls.size() && b.x.size() == ls.size(), "kernel_param_gradients: dimension mismatch");

  const Eigen::ArrayXd diff2 = (a.x - b.x).array().square();
  const double r2 = (diff2 / ls.array().square()).sum();
  const double kx = matern52_from_r2(r2, p.continuous.variance);
  const double kh = categorical_overlap(a.h, b.h, p.categorical);
  const double lam = p.lambda;

  const double x_weight = (1.0 - lam) + lam * kh;  // dk_z/dk_x
  const double h_weight = (1.0 - lam) + lam * kx;  // dk_z/dk_h

  KernelGradient g;
  // d r^2 / d l_k = -2 diff_k^2 / l_k^3
  g.lengthscales = x_weight * matern52_dr2(r2, p.continuous.variance) *
                   (-2.0 * diff2 / ls.array().cube()).matrix();
  g.continuous_variance = x_weight * kx / p.continuous.variance;
  g.categorical_variance = h_weight * kh / p.categorical.variance;
  g.lambda = -(kh + kx) + kh * kx;
  return g;
}

JitteredCholesky cholesky_with_jitter(const Eigen::MatrixXd& K, double initial_jitter) {
  if (!K.allFinite()) throw NumericalFault("cannot factorise a matrix with non-finite entries");
  JitteredCholesky out;
  if (initial_jitter <= 0.0) {
    out.llt.compute(K);
    if (out.llt.info() == Eigen::Success) return out;
  }
  const double mean_diag = std::max(K.diagonal().mean(), 1e-300);
  double jitter = std::max(1e-6 * mean_diag, initial_jitter);
  for (int attempt = 0; attempt <= 10; ++attempt, jitter *= 2.0) {
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += jitter;
    out.llt.compute(Kj);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = jitter;
      return out;
    }
  }
  throw NumericalFault("Cholesky factorisation failed after jitter escalation");
}

}  // namespace cocabo
