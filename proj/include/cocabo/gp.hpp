#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "cocabo/kernels.hpp"
#include "cocabo/random.hpp"
#include "cocabo/space.hpp"

namespace cocabo {

inline constexpr double kNoiseFloor = 1e-8;

/// Mixture is the categorical/continuous kernel; ContinuousOnly is a plain
/// Matérn 5/2 over x (used for the one-hot encoded baseline, where the
/// categorical part of every point is empty).
enum class KernelForm { Mixture, ContinuousOnly };

struct GpParams {
  KernelForm form = KernelForm::Mixture;
  MixtureParams mixture;
  double noise_variance = 1e-3;

  static GpParams defaults(int dim, KernelForm form = KernelForm::Mixture, double lambda = 0.5);
  void validate(int dim) const;
};

/// Prior covariance of the model described by `params`.
double prior_covariance(const MixedPoint& a, const MixedPoint& b, const GpParams& params);

/// Targets are modelled as (f - mean) / scale.
struct TargetTransform {
  double mean = 0.0;
  double scale = 1.0;

  /// Sample mean and population standard deviation; scale falls back to 1
  /// for fewer than two points or constant targets.
  static TargetTransform standardise(const Eigen::VectorXd& y);

  double forward(double f) const { return (f - mean) / scale; }
  double inverse(double y) const { return y * scale + mean; }
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

struct BatchPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

/// Immutable exact-GP posterior. Predictions are in original target units
/// and report the latent (noise-free) variance.
class GpPosterior {
 public:
  const GpParams& params() const { return params_; }
  const TargetTransform& transform() const { return transform_; }
  std::size_t size() const { return points_.size(); }
  const std::vector<MixedPoint>& points() const { return points_; }
  /// Standardised training targets.
  const Eigen::VectorXd& targets() const { return y_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  /// Lower Cholesky factor of K + (noise + jitter) I.
  const Eigen::MatrixXd& factor() const { return L_; }
  double jitter() const { return jitter_; }

  Prediction predict(const MixedPoint& z) const;

  /// Predictions at the rows of `X`, all sharing the categorical vector `h`.
  BatchPrediction predict_batch(const Eigen::VectorXi& h, const Eigen::MatrixXd& X) const;

  /// Posterior with (z, value) appended, keeping hyperparameters and target
  /// transform fixed. Extends the factor by one row.
  GpPosterior condition_on(const MixedPoint& z, double value) const;

 private:
  friend GpPosterior fit(const Dataset&, const GpParams&, const TargetTransform&, double);

  Eigen::MatrixXd cross_covariance(const Eigen::VectorXi& h, const Eigen::MatrixXd& X) const;
  double prior_diagonal() const;

  GpParams params_;
  TargetTransform transform_;
  std::vector<MixedPoint> points_;
  Eigen::MatrixXd X_;  // n x d
  Eigen::MatrixXi H_;  // n x c
  Eigen::VectorXd y_;
  Eigen::MatrixXd L_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
};

/// Fits with standardised targets.
GpPosterior fit(const Dataset& data, const GpParams& params);

/// Fits with an explicit target transform. `min_jitter` forces at least that
/// much diagonal jitter (used when retrying after a numerical fault).
GpPosterior fit(const Dataset& data, const GpParams& params, const TargetTransform& transform,
                double min_jitter = 0.0);

/// Packed hyperparameter vector: log lengthscales, log continuous variance,
/// [log categorical variance, lambda,] log noise. The bracketed entries
/// exist for the Mixture form only.
struct HyperLayout {
  KernelForm form = KernelForm::Mixture;
  int dim = 0;

  static HyperLayout of(const GpParams& params);

  int size() const { return form == KernelForm::Mixture ? dim + 4 : dim + 2; }
  int lengthscale(int k) const { return k; }
  int continuous_variance() const { return dim; }
  int categorical_variance() const { return dim + 1; }
  int lambda() const { return dim + 2; }
  int noise() const { return form == KernelForm::Mixture ? dim + 3 : dim + 1; }
  bool has_lambda() const { return form == KernelForm::Mixture; }
};

Eigen::VectorXd pack(const GpParams& params);
GpParams unpack(const Eigen::VectorXd& packed, const GpParams& like);

/// Box on the packed vector used during optimisation.
struct HyperBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static HyperBounds defaults(const HyperLayout& layout);
};

/// Log marginal likelihood of the standardised targets, including the
/// -(n/2) log 2 pi constant.
double log_marginal_likelihood(const Dataset& data, const GpParams& params);

/// Gradient of log_marginal_likelihood with respect to the packed vector.
Eigen::VectorXd lml_gradient(const Dataset& data, const GpParams& params);

/// Zeroes the components whose coordinate sits on a bound with the gradient
/// pointing outside the box.
Eigen::VectorXd project_gradient(const Eigen::VectorXd& gradient, const Eigen::VectorXd& packed,
                                 const HyperBounds& bounds);

struct HyperOptions {
  int restarts = 10;
  int max_steps = 200;
  double gradient_tolerance = 1e-5;
  bool optimise_lambda = false;
};

struct HyperResult {
  GpParams params;
  double lml = 0.0;
  /// LML at each restart's start point (NaN when it could not be evaluated).
  std::vector<double> start_lml;
  int failed_restarts = 0;
  /// True when every restart failed and `params` is the caller's input.
  bool fell_back = false;
};

/// Multi-start projected quasi-Newton ascent of the LML. The first start is
/// `current`; the others draw lengthscales log-uniformly in [1e-2, 10],
/// variances in [0.1, 10], noise in [1e-6, 0.1] and lambda uniformly in
/// [0, 1] (lambda stays at its current value unless optimise_lambda).
HyperResult optimize_hyperparameters(const Dataset& data, const GpParams& current, const HyperOptions& options,
                                     Rng& rng);

}  // namespace cocabo
