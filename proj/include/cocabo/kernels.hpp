#pragma once

#include <cmath>
#include <span>

#include <Eigen/Dense>

#include "cocabo/errors.hpp"
#include "cocabo/space.hpp"

namespace cocabo {

/// Matérn 5/2 parameters with one lengthscale per continuous dimension.
struct ContinuousKernelParams {
  Eigen::VectorXd lengthscales;
  double variance = 1.0;

  void validate(int dim) const;
};

/// Variance of the normalised overlap kernel over categorical vectors.
struct CategoricalKernelParams {
  double variance = 1.0;

  void validate() const;
};

/// Sum/product mixture: (1 - lambda)(k_h + k_x) + lambda k_h k_x.
struct MixtureParams {
  ContinuousKernelParams continuous;
  CategoricalKernelParams categorical;
  double lambda = 0.5;

  void validate(int dim) const;
};

namespace detail {
inline constexpr double kSqrt5 = 2.23606797749978969640;
}

/// Matérn 5/2 as a function of the scaled squared distance r^2.
inline double matern52_from_r2(double r2, double variance) {
  const double r = std::sqrt(r2);
  return variance * (1.0 + detail::kSqrt5 * r + (5.0 / 3.0) * r2) * std::exp(-detail::kSqrt5 * r);
}

/// dk/d(r^2); finite at r = 0.
inline double matern52_dr2(double r2, double variance) {
  const double r = std::sqrt(r2);
  return -variance * (5.0 / 6.0) * (1.0 + detail::kSqrt5 * r) * std::exp(-detail::kSqrt5 * r);
}

template <typename DerivedA, typename DerivedB>
double matern52(const Eigen::MatrixBase<DerivedA>& x, const Eigen::MatrixBase<DerivedB>& y,
                const ContinuousKernelParams& p) {
  require(x.size() == y.size() && x.size() == p.lengthscales.size(),
          "matern52: dimension mismatch");
  const double r2 = ((x - y).array() / p.lengthscales.array()).square().sum();
  return matern52_from_r2(r2, p.variance);
}

/// Unit-variance squared-exponential on scalars; the overlap kernel is its
/// lengthscale -> 0 limit on integer-coded categories.
inline double rbf(double a, double b, double lengthscale) {
  const double d = (a - b) / lengthscale;
  return std::exp(-0.5 * d * d);
}

template <typename DerivedA, typename DerivedB>
int count_matches(const Eigen::MatrixBase<DerivedA>& h, const Eigen::MatrixBase<DerivedB>& g) {
  require(h.size() == g.size(), "categorical vectors differ in length");
  return static_cast<int>((h.array() == g.array()).count());
}

/// variance * (#matching positions) / c.
template <typename DerivedA, typename DerivedB>
double categorical_overlap(const Eigen::MatrixBase<DerivedA>& h, const Eigen::MatrixBase<DerivedB>& g,
                           const CategoricalKernelParams& p) {
  const int matches = count_matches(h, g);
  require(h.size() > 0, "categorical_overlap needs at least one categorical variable");
  return p.variance * static_cast<double>(matches) / static_cast<double>(h.size());
}

inline double mix(double kh, double kx, double lambda) {
  return (1.0 - lambda) * (kh + kx) + lambda * kh * kx;
}

double cocabo_kernel(const MixedPoint& a, const MixedPoint& b, const MixtureParams& p);

/// Gram matrix of the mixture kernel plus `noise` on the diagonal. Throws
/// NumericalFault on non-finite entries.
Eigen::MatrixXd kernel_matrix(std::span<const MixedPoint> points, const MixtureParams& p, double noise);

/// Partials of cocabo_kernel with respect to the raw (untransformed)
/// hyperparameters.
struct KernelGradient {
  Eigen::VectorXd lengthscales;
  double continuous_variance = 0.0;
  double categorical_variance = 0.0;
  double lambda = 0.0;
};

KernelGradient kernel_param_gradients(const MixedPoint& a, const MixedPoint& b, const MixtureParams& p);

/// Cholesky factor together with the diagonal jitter that made it succeed.
struct JitteredCholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

/// Factorises K as is; on failure adds 1e-6 * mean(diag(K)) (or
/// `initial_jitter` if larger) and doubles it up to ten times. Throws
/// NumericalFault when every attempt fails.
JitteredCholesky cholesky_with_jitter(const Eigen::MatrixXd& K, double initial_jitter = 0.0);

}  // namespace cocabo
