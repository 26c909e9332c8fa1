#include "cocabo/gp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <optional>

namespace cocabo {

namespace {

constexpr double kSqrt5 = detail::kSqrt5;

Eigen::MatrixXd stack_continuous(const std::vector<MixedPoint>& points) {
  if (points.empty()) return {};
  Eigen::MatrixXd X(static_cast<Eigen::Index>(points.size()), points.front().x.size());
  for (std::size_t i = 0; i < points.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = points[i].x.transpose();
  return X;
}

Eigen::MatrixXi stack_categorical(const std::vector<MixedPoint>& points) {
  if (points.empty()) return {};
  Eigen::MatrixXi H(static_cast<Eigen::Index>(points.size()), points.front().h.size());
  for (std::size_t i = 0; i < points.size(); ++i) H.row(static_cast<Eigen::Index>(i)) = points[i].h.transpose();
  return H;
}

/// Fraction of matching categorical positions between the rows of H and h.
Eigen::VectorXd match_fraction(const Eigen::MatrixXi& H, const Eigen::VectorXi& h) {
  const auto c = H.cols();
  if (c == 0) return Eigen::VectorXd::Zero(H.rows());
  Eigen::VectorXd m = Eigen::VectorXd::Zero(H.rows());
  for (Eigen::Index j = 0; j < c; ++j) m.array() += (H.col(j).array() == h[j]).cast<double>();
  return m / static_cast<double>(c);
}

/// Pairwise quantities of a training set that do not depend on the
/// hyperparameters.
struct Geometry {
  std::vector<Eigen::ArrayXXd> sqdiff;  // one n x n array per continuous dimension
  Eigen::ArrayXXd match;                // fraction of matching categorical positions

  Geometry(const Eigen::MatrixXd& X, const Eigen::MatrixXi& H) {
    const auto n = X.rows();
    sqdiff.reserve(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
      Eigen::ArrayXXd D(n, n);
      for (Eigen::Index j = 0; j < n; ++j) D.col(j) = (X.col(k).array() - X(j, k)).square();
      sqdiff.push_back(std::move(D));
    }
    match.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) match.col(j) = match_fraction(H, H.row(j).transpose()).array();
  }
};

/// Kernel pieces evaluated on a Geometry.
struct CovarianceParts {
  Eigen::ArrayXXd r2;
  Eigen::ArrayXXd kx;
  Eigen::ArrayXXd kh;  // empty for ContinuousOnly
  Eigen::MatrixXd K;   // without noise
};

CovarianceParts evaluate_covariance(const Geometry& geom, const GpParams& p) {
  const auto& ls = p.mixture.continuous.lengthscales;
  CovarianceParts parts;
  const auto n = geom.match.rows();
  parts.r2 = Eigen::ArrayXXd::Zero(n, n);
  for (std::size_t k = 0; k < geom.sqdiff.size(); ++k)
    parts.r2 += geom.sqdiff[k] / (ls[static_cast<Eigen::Index>(k)] * ls[static_cast<Eigen::Index>(k)]);
  const Eigen::ArrayXXd r = parts.r2.sqrt();
  parts.kx = p.mixture.continuous.variance * (1.0 + kSqrt5 * r + (5.0 / 3.0) * parts.r2) * (-kSqrt5 * r).exp();
  if (p.form == KernelForm::Mixture) {
    const double lam = p.mixture.lambda;
    parts.kh = p.mixture.categorical.variance * geom.match;
    parts.K = ((1.0 - lam) * (parts.kh + parts.kx) + lam * parts.kh * parts.kx).matrix();
  } else {
    parts.K = parts.kx.matrix();
  }
  if (!parts.K.allFinite()) throw NumericalFault("kernel matrix has non-finite entries");
  return parts;
}

template <typename Derived>
double log_det_from_factor(const Eigen::MatrixBase<Derived>& L) {
  return 2.0 * L.diagonal().array().log().sum();
}

/// LML (and gradient) of one fixed dataset for varying hyperparameters.
class LmlEvaluator {
 public:
  explicit LmlEvaluator(const Dataset& data)
      : X_(stack_continuous(data.points())),
        H_(stack_categorical(data.points())),
        geom_(X_, H_) {
    const Eigen::VectorXd f = data.values();
    const auto t = TargetTransform::standardise(f);
    y_ = (f.array() - t.mean) / t.scale;
  }

  struct Result {
    double lml = 0.0;
    Eigen::VectorXd gradient;  // empty until add_gradient
    GpParams params;
    CovarianceParts parts;
    Eigen::LLT<Eigen::MatrixXd> llt;
    Eigen::VectorXd alpha;
  };

  Result evaluate(const GpParams& p, bool with_gradient) const {
    const auto n = static_cast<double>(y_.size());
    Result out;
    out.params = p;
    out.parts = evaluate_covariance(geom_, p);
    Eigen::MatrixXd K = out.parts.K;
    K.diagonal().array() += p.noise_variance;
    out.llt = cholesky_with_jitter(K).llt;
    out.alpha = out.llt.solve(y_);
    out.lml = -0.5 * y_.dot(out.alpha) - 0.5 * log_det_from_factor(out.llt.matrixLLT()) -
              0.5 * n * std::log(2.0 * std::numbers::pi);
    if (!std::isfinite(out.lml)) throw NumericalFault("log marginal likelihood is not finite");
    if (with_gradient) add_gradient(out);
    return out;
  }

  void add_gradient(Result& res) const {
    const GpParams& p = res.params;
    const CovarianceParts& parts = res.parts;
    const auto layout = HyperLayout::of(p);
    res.gradient.resize(layout.size());
    Eigen::MatrixXd Linv = Eigen::MatrixXd::Identity(y_.size(), y_.size());
    res.llt.matrixL().solveInPlace(Linv);
    Eigen::MatrixXd W = res.alpha * res.alpha.transpose();
    W.noalias() -= Linv.transpose().triangularView<Eigen::Upper>() * Linv;

    const auto& cont = p.mixture.continuous;
    const Eigen::ArrayXXd r = parts.r2.sqrt();
    const Eigen::ArrayXXd dk_dr2 = -cont.variance * (5.0 / 6.0) * (1.0 + kSqrt5 * r) * (-kSqrt5 * r).exp();

    Eigen::ArrayXXd Wx;
    const auto Wa = W.array();
    if (p.form == KernelForm::Mixture) {
      const double lam = p.mixture.lambda;
      Wx = Wa * ((1.0 - lam) + lam * parts.kh);
      res.gradient[layout.categorical_variance()] = 0.5 * (Wa * ((1.0 - lam) + lam * parts.kx) * parts.kh).sum();
      res.gradient[layout.lambda()] = 0.5 * (Wa * (parts.kh * parts.kx - parts.kh - parts.kx)).sum();
    } else {
      Wx = Wa;
    }

    const Eigen::ArrayXXd Q = Wx * dk_dr2;
    for (int k = 0; k < layout.dim; ++k) {
      const double l = cont.lengthscales[k];
      res.gradient[layout.lengthscale(k)] = -(Q * geom_.sqdiff[static_cast<std::size_t>(k)]).sum() / (l * l);
    }
    res.gradient[layout.continuous_variance()] = 0.5 * (Wx * parts.kx).sum();
    res.gradient[layout.noise()] = 0.5 * p.noise_variance * W.trace();
  }

 private:
  Eigen::MatrixXd X_;
  Eigen::MatrixXi H_;
  Geometry geom_;
  Eigen::VectorXd y_;
};

void check_dimensions(const Dataset& data, const GpParams& params) {
  require(!data.empty(), "dataset is empty");
  params.validate(static_cast<int>(data.point(0).x.size()));
  if (params.form == KernelForm::Mixture)
    require(data.point(0).h.size() > 0, "mixture kernel needs at least one categorical variable");
}

}  // namespace

GpParams GpParams::defaults(int dim, KernelForm form, double lambda) {
  GpParams p;
  p.form = form;
  p.mixture.continuous.lengthscales = Eigen::VectorXd::Constant(dim, 0.5);
  p.mixture.continuous.variance = 1.0;
  p.mixture.categorical.variance = 1.0;
  p.mixture.lambda = lambda;
  p.noise_variance = 1e-3;
  return p;
}

void GpParams::validate(int dim) const {
  mixture.continuous.validate(dim);
  if (form == KernelForm::Mixture) {
    mixture.categorical.validate();
    require(mixture.lambda >= 0.0 && mixture.lambda <= 1.0, "lambda must lie in [0, 1]");
  }
  require(noise_variance >= kNoiseFloor * (1.0 - 1e-12), "noise variance below the 1e-8 floor");
}

double prior_covariance(const MixedPoint& a, const MixedPoint& b, const GpParams& params) {
  if (params.form == KernelForm::ContinuousOnly) return matern52(a.x, b.x, params.mixture.continuous);
  return cocabo_kernel(a, b, params.mixture);
}

TargetTransform TargetTransform::standardise(const Eigen::VectorXd& y) {
  TargetTransform t;
  if (y.size() == 0) return t;
  t.mean = y.mean();
  if (y.size() < 2) return t;
  const double sd = std::sqrt((y.array() - t.mean).square().mean());
  if (sd > 1e-12 * std::max(1.0, std::abs(t.mean))) t.scale = sd;
  return t;
}

// ---------------------------------------------------------------- posterior

double GpPosterior::prior_diagonal() const {
  const auto& m = params_.mixture;
  if (params_.form == KernelForm::ContinuousOnly) return m.continuous.variance;
  return mix(m.categorical.variance, m.continuous.variance, m.lambda);
}

Eigen::MatrixXd GpPosterior::cross_covariance(const Eigen::VectorXi& h, const Eigen::MatrixXd& X) const {
  const auto& cont = params_.mixture.continuous;
  const auto n = X_.rows();
  const auto m = X.rows();
  Eigen::ArrayXXd r2 = Eigen::ArrayXXd::Zero(n, m);
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    const double inv_l = 1.0 / cont.lengthscales[k];
    for (Eigen::Index j = 0; j < m; ++j) r2.col(j) += ((X_.col(k).array() - X(j, k)) * inv_l).square();
  }
  const Eigen::ArrayXXd r = r2.sqrt();
  Eigen::ArrayXXd kx = cont.variance * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2) * (-kSqrt5 * r).exp();
  if (params_.form == KernelForm::ContinuousOnly) return kx.matrix();

  const double lam = params_.mixture.lambda;
  const Eigen::ArrayXd kh = params_.mixture.categorical.variance * match_fraction(H_, h).array();
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index j = 0; j < m; ++j)
    out.col(j) = ((1.0 - lam) * (kh + kx.col(j)) + lam * kh * kx.col(j)).matrix();
  return out;
}

BatchPrediction GpPosterior::predict_batch(const Eigen::VectorXi& h, const Eigen::MatrixXd& X) const {
  require(X.cols() == params_.mixture.continuous.lengthscales.size(), "predict: dimension mismatch");
  if (params_.form == KernelForm::Mixture) require(h.size() > 0, "predict: missing categorical values");
  if (!points_.empty()) require(h.size() == H_.cols(), "predict: categorical dimension mismatch");

  const auto m = X.rows();
  BatchPrediction out;
  const double prior = prior_diagonal();
  if (points_.empty()) {
    out.mean = Eigen::VectorXd::Constant(m, transform_.mean);
    out.variance = Eigen::VectorXd::Constant(m, prior * transform_.scale * transform_.scale);
    return out;
  }
  Eigen::MatrixXd Ks = cross_covariance(h, X);
  out.mean = (Ks.transpose() * alpha_).array() * transform_.scale + transform_.mean;
  L_.triangularView<Eigen::Lower>().solveInPlace(Ks);
  out.variance = ((prior - Ks.colwise().squaredNorm().transpose().array()).max(0.0)) *
                 (transform_.scale * transform_.scale);
  return out;
}

Prediction GpPosterior::predict(const MixedPoint& z) const {
  const BatchPrediction b = predict_batch(z.h, z.x.transpose());
  return {b.mean[0], b.variance[0]};
}

GpPosterior GpPosterior::condition_on(const MixedPoint& z, double value) const {
  if (points_.empty()) {
    Dataset d;
    d.add(z, value);
    return fit(d, params_, transform_, jitter_);
  }
  const auto n = X_.rows();
  const Eigen::VectorXd k = cross_covariance(z.h, z.x.transpose()).col(0);
  const double kzz = prior_diagonal() + params_.noise_variance + jitter_;
  const Eigen::VectorXd l = L_.triangularView<Eigen::Lower>().solve(k);
  const double d2 = kzz - l.squaredNorm();

  if (!(d2 > 1e-12 * kzz)) {
    Dataset rebuilt;
    for (Eigen::Index i = 0; i < n; ++i)
      rebuilt.add(points_[static_cast<std::size_t>(i)], transform_.inverse(y_[i]));
    rebuilt.add(z, value);
    return fit(rebuilt, params_, transform_, jitter_);
  }

  GpPosterior out = *this;
  out.points_.push_back(z);
  out.X_.conservativeResize(n + 1, Eigen::NoChange);
  out.X_.row(n) = z.x.transpose();
  out.H_.conservativeResize(n + 1, Eigen::NoChange);
  if (H_.cols() > 0) out.H_.row(n) = z.h.transpose();
  out.y_.conservativeResize(n + 1);
  out.y_[n] = transform_.forward(value);
  out.L_.conservativeResize(n + 1, n + 1);
  out.L_.col(n).setZero();
  out.L_.row(n).head(n) = l.transpose();
  out.L_(n, n) = std::sqrt(d2);
  out.alpha_ = out.L_.triangularView<Eigen::Lower>().solve(out.y_);
  out.L_.triangularView<Eigen::Lower>().transpose().solveInPlace(out.alpha_);
  return out;
}

GpPosterior fit(const Dataset& data, const GpParams& params) {
  return fit(data, params, TargetTransform::standardise(data.values()));
}

GpPosterior fit(const Dataset& data, const GpParams& params, const TargetTransform& transform, double min_jitter) {
  GpPosterior post;
  post.params_ = params;
  post.transform_ = transform;
  if (data.empty()) return post;
  check_dimensions(data, params);

  post.points_ = data.points();
  post.X_ = stack_continuous(post.points_);
  post.H_ = stack_categorical(post.points_);
  post.y_ = (data.values().array() - transform.mean) / transform.scale;

  const Geometry geom(post.X_, post.H_);
  Eigen::MatrixXd K = evaluate_covariance(geom, params).K;
  K.diagonal().array() += params.noise_variance;
  const JitteredCholesky chol = cholesky_with_jitter(K, min_jitter);
  post.L_ = chol.llt.matrixL();
  post.jitter_ = chol.jitter;
  post.alpha_ = chol.llt.solve(post.y_);
  return post;
}

// ---------------------------------------------------------- hyperparameters

HyperLayout HyperLayout::of(const GpParams& params) {
  return HyperLayout{params.form, static_cast<int>(params.mixture.continuous.lengthscales.size())};
}

Eigen::VectorXd pack(const GpParams& params) {
  const auto layout = HyperLayout::of(params);
  Eigen::VectorXd v(layout.size());
  v.head(layout.dim) = params.mixture.continuous.lengthscales.array().log();
  v[layout.continuous_variance()] = std::log(params.mixture.continuous.variance);
  if (layout.has_lambda()) {
    v[layout.categorical_variance()] = std::log(params.mixture.categorical.variance);
    v[layout.lambda()] = params.mixture.lambda;
  }
  v[layout.noise()] = std::log(params.noise_variance);
  return v;
}

GpParams unpack(const Eigen::VectorXd& packed, const GpParams& like) {
  const auto layout = HyperLayout::of(like);
  require(packed.size() == layout.size(), "packed hyperparameter vector has the wrong size");
  GpParams p = like;
  p.mixture.continuous.lengthscales = packed.head(layout.dim).array().exp();
  p.mixture.continuous.variance = std::exp(packed[layout.continuous_variance()]);
  if (layout.has_lambda()) {
    p.mixture.categorical.variance = std::exp(packed[layout.categorical_variance()]);
    p.mixture.lambda = std::clamp(packed[layout.lambda()], 0.0, 1.0);
  }
  p.noise_variance = std::max(std::exp(packed[layout.noise()]), kNoiseFloor);
  return p;
}

HyperBounds HyperBounds::defaults(const HyperLayout& layout) {
  HyperBounds b;
  b.lower.resize(layout.size());
  b.upper.resize(layout.size());
  b.lower.head(layout.dim).setConstant(std::log(1e-3));
  b.upper.head(layout.dim).setConstant(std::log(1e3));
  b.lower[layout.continuous_variance()] = std::log(1e-3);
  b.upper[layout.continuous_variance()] = std::log(1e3);
  if (layout.has_lambda()) {
    b.lower[layout.categorical_variance()] = std::log(1e-3);
    b.upper[layout.categorical_variance()] = std::log(1e3);
    b.lower[layout.lambda()] = 0.0;
    b.upper[layout.lambda()] = 1.0;
  }
  b.lower[layout.noise()] = std::log(kNoiseFloor);
  b.upper[layout.noise()] = 0.0;
  return b;
}

double log_marginal_likelihood(const Dataset& data, const GpParams& params) {
  check_dimensions(data, params);
  return LmlEvaluator(data).evaluate(params, false).lml;
}

Eigen::VectorXd lml_gradient(const Dataset& data, const GpParams& params) {
  check_dimensions(data, params);
  return LmlEvaluator(data).evaluate(params, true).gradient;
}

Eigen::VectorXd project_gradient(const Eigen::VectorXd& gradient, const Eigen::VectorXd& packed,
                                 const HyperBounds& bounds) {
  Eigen::VectorXd g = gradient;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if ((packed[i] <= bounds.lower[i] && g[i] < 0.0) || (packed[i] >= bounds.upper[i] && g[i] > 0.0)) g[i] = 0.0;
  }
  return g;
}

namespace {

/// LML over packed coordinates; numerical faults read as "no value".
struct PackedObjective {
  const LmlEvaluator& evaluator;
  const GpParams& like;

  std::optional<LmlEvaluator::Result> operator()(const Eigen::VectorXd& v, bool with_gradient) const {
    try {
      return evaluator.evaluate(unpack(v, like), with_gradient);
    } catch (const NumericalFault&) {
      return std::nullopt;
    }
  }
  void add_gradient(LmlEvaluator::Result& r) const { evaluator.add_gradient(r); }
};

struct AscentOutcome {
  Eigen::VectorXd x;
  double value = -std::numeric_limits<double>::infinity();
  bool ok = false;
};

/// Projected L-BFGS ascent with Armijo backtracking. `frozen` coordinates are
/// never moved. Every accepted step increases the objective.
template <typename Objective>
AscentOutcome projected_lbfgs_ascent(const Objective& objective, Eigen::VectorXd x, const HyperBounds& bounds,
                                     const std::vector<bool>& frozen, int max_steps, double gradient_tolerance) {
  constexpr int kMemory = 8;
  constexpr double kArmijo = 1e-4;
  x = x.cwiseMax(bounds.lower).cwiseMin(bounds.upper);

  AscentOutcome out;
  auto current = objective(x, true);
  if (!current) return out;
  double value = current->lml;
  Eigen::VectorXd grad = current->gradient;

  auto projected = [&](const Eigen::VectorXd& g, const Eigen::VectorXd& at) {
    Eigen::VectorXd pg = project_gradient(g, at, bounds);
    for (std::size_t i = 0; i < frozen.size(); ++i)
      if (frozen[i]) pg[static_cast<Eigen::Index>(i)] = 0.0;
    return pg;
  };

  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> memory;  // (s, y) for minimising -L
  for (int step = 0; step < max_steps; ++step) {
    const Eigen::VectorXd pg = projected(grad, x);
    if (pg.lpNorm<Eigen::Infinity>() < gradient_tolerance) break;

    // Two-loop recursion on the descent problem for -L; ascent direction = -H (-pg).
    Eigen::VectorXd q = pg;
    std::vector<double> alphas(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;) {
      const auto& [s, y] = memory[i];
      alphas[i] = s.dot(q) / y.dot(s);
      q -= alphas[i] * y;
    }
    if (!memory.empty()) {
      const auto& [s, y] = memory.back();
      q *= s.dot(y) / y.squaredNorm();
    } else {
      q /= std::max(1.0, pg.lpNorm<Eigen::Infinity>());
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const auto& [s, y] = memory[i];
      const double beta = y.dot(q) / y.dot(s);
      q += (alphas[i] - beta) * s;
    }
    Eigen::VectorXd direction = q;
    for (Eigen::Index i = 0; i < direction.size(); ++i)
      if (pg[i] == 0.0) direction[i] = 0.0;
    if (!(direction.dot(pg) > 0.0)) {
      memory.clear();
      direction = pg / std::max(1.0, pg.lpNorm<Eigen::Infinity>());
    }

    bool accepted = false;
    double t = 1.0;
    for (int back = 0; back < 40; ++back, t *= 0.5) {
      const Eigen::VectorXd trial = (x + t * direction).cwiseMax(bounds.lower).cwiseMin(bounds.upper);
      const Eigen::VectorXd delta = trial - x;
      if (delta.lpNorm<Eigen::Infinity>() == 0.0) break;
      auto next = objective(trial, false);
      if (!next || !(next->lml >= value + kArmijo * pg.dot(delta))) continue;
      objective.add_gradient(*next);
      const Eigen::VectorXd y = -(next->gradient - grad);
      if (delta.dot(y) > 1e-12) {
        memory.emplace_back(delta, y);
        if (memory.size() > kMemory) memory.pop_front();
      }
      const double improvement = next->lml - value;
      x = trial;
      value = next->lml;
      grad = next->gradient;
      accepted = true;
      if (improvement < 1e-10 * (1.0 + std::abs(value))) step = max_steps;
      break;
    }
    if (!accepted) break;
  }
  out.x = x;
  out.value = value;
  out.ok = true;
  return out;
}

}  // namespace

HyperResult optimize_hyperparameters(const Dataset& data, const GpParams& current, const HyperOptions& options,
                                     Rng& rng) {
  require(data.size() >= 2, "hyperparameter optimisation needs at least two observations");
  require(options.restarts >= 1, "need at least one restart");
  check_dimensions(data, current);

  const LmlEvaluator evaluator(data);
  const auto layout = HyperLayout::of(current);
  const auto bounds = HyperBounds::defaults(layout);
  std::vector<bool> frozen(static_cast<std::size_t>(layout.size()), false);
  if (layout.has_lambda() && !options.optimise_lambda) frozen[static_cast<std::size_t>(layout.lambda())] = true;

  const PackedObjective objective{evaluator, current};

  HyperResult result;
  result.params = current;
  result.lml = -std::numeric_limits<double>::infinity();
  bool any = false;

  for (int restart = 0; restart < options.restarts; ++restart) {
    Eigen::VectorXd start = pack(current);
    if (restart > 0) {
      for (int k = 0; k < layout.dim; ++k) start[k] = uniform(rng, std::log(1e-2), std::log(10.0));
      start[layout.continuous_variance()] = uniform(rng, std::log(0.1), std::log(10.0));
      if (layout.has_lambda()) {
        start[layout.categorical_variance()] = uniform(rng, std::log(0.1), std::log(10.0));
        const double lam = uniform01(rng);
        if (options.optimise_lambda) start[layout.lambda()] = lam;
      }
      start[layout.noise()] = uniform(rng, std::log(1e-6), std::log(1e-1));
    }
    start = start.cwiseMax(bounds.lower).cwiseMin(bounds.upper);

    const auto start_value = objective(start, false);
    result.start_lml.push_back(start_value ? start_value->lml : std::numeric_limits<double>::quiet_NaN());

    const AscentOutcome outcome =
        projected_lbfgs_ascent(objective, start, bounds, frozen, options.max_steps, options.gradient_tolerance);
    if (!outcome.ok) {
      ++result.failed_restarts;
      continue;
    }
    if (!any || outcome.value > result.lml) {
      any = true;
      result.lml = outcome.value;
      result.params = unpack(outcome.x, current);
    }
  }
  if (!any) {
    result.params = current;
    result.fell_back = true;
  }
  return result;
}

}  // namespace cocabo
