#include <doctest.h>

#include <numbers>

#include "cocabo/gp.hpp"
#include "test_util.hpp"

using namespace cocabo;
using cocabo::testing::point;

namespace {

Dataset structured_data(const SearchSpace& space, int n, Rng& rng) {
  Dataset d;
  for (int i = 0; i < n; ++i) {
    MixedPoint z = space.sample(rng);
    const double f = std::sin(3 * z.x[0]) + 0.5 * z.h[0] - z.x.squaredNorm();
    d.add(std::move(z), f);
  }
  return d;
}

// Direct evaluation with an explicit inverse and determinant.
double dense_lml(const Dataset& data, const GpParams& p) {
  const auto t = TargetTransform::standardise(data.values());
  const Eigen::VectorXd y = (data.values().array() - t.mean) / t.scale;
  const Eigen::MatrixXd K = kernel_matrix(data.points(), p.mixture, p.noise_variance);
  const double n = static_cast<double>(y.size());
  return -0.5 * y.dot(K.inverse() * y) - 0.5 * std::log(K.determinant()) - 0.5 * n * std::log(2 * std::numbers::pi);
}

}  // namespace

TEST_SUITE("gp") {

TEST_CASE("target standardisation") {
  const auto t = TargetTransform::standardise(Eigen::Vector3d(1.0, 2.0, 3.0));
  CHECK(t.mean == 2.0);
  CHECK(t.scale == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK(t.inverse(t.forward(7.5)) == doctest::Approx(7.5));
  CHECK(TargetTransform::standardise(Eigen::Vector2d(4.0, 4.0)).scale == 1.0);
}

TEST_CASE("single point with zero target") {
  Dataset d;
  d.add(point({1}, {0.2}), 3.0);
  const GpParams p = GpParams::defaults(1);
  const GpPosterior post = fit(d, p);
  REQUIRE(post.alpha().size() == 1);
  CHECK(post.alpha()[0] == 0.0);

  const double s = cocabo_kernel(d.point(0), d.point(0), p.mixture) + p.noise_variance;
  CHECK(log_marginal_likelihood(d, p) == doctest::Approx(-0.5 * std::log(s) - 0.5 * std::log(2 * std::numbers::pi)));
}

TEST_CASE("duplicated inputs with distinct targets") {
  Dataset d;
  d.add(point({0}, {0.1}), 1.0);
  d.add(point({0}, {0.1}), 2.0);
  const GpPosterior post = fit(d, GpParams::defaults(1));
  CHECK(post.jitter() == 0.0);
  CHECK(post.predict(d.point(0)).mean == doctest::Approx(1.5).epsilon(1e-3));
}

TEST_CASE("factor reproduces the regularised Gram matrix") {
  Rng rng(1);
  const SearchSpace space({3, 5}, Box::uniform(2, -1, 1));
  const Dataset d = structured_data(space, 40, rng);
  const GpParams p = testing::random_params(2, rng);
  const GpPosterior post = fit(d, p);
  const Eigen::MatrixXd K = kernel_matrix(d.points(), p.mixture, p.noise_variance + post.jitter());
  const Eigen::MatrixXd LLt = post.factor() * post.factor().transpose();
  CHECK((LLt - K).norm() / K.norm() < 1e-8);
}

TEST_CASE("predictions at training points") {
  Rng rng(2);
  const SearchSpace space({3, 5}, Box::uniform(2, -1, 1));
  const Dataset d = structured_data(space, 50, rng);
  GpParams p = GpParams::defaults(2);
  p.noise_variance = 1e-3;
  const GpPosterior post = fit(d, p);
  const double noise_sd = std::sqrt(p.noise_variance) * post.transform().scale;
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(std::abs(post.predict(d.point(i)).mean - d.value(i)) < 3 * noise_sd);

  p.noise_variance = kNoiseFloor;
  const GpPosterior exact = fit(d, p);
  const double s2 = exact.transform().scale * exact.transform().scale;
  for (std::size_t i = 0; i < d.size(); ++i)
    CHECK(exact.predict(d.point(i)).variance <= 1e-6 * prior_covariance(d.point(i), d.point(i), p) * s2);
}

TEST_CASE("product kernel recovers the prior away from the data") {
  Rng rng(4);
  Dataset d;
  for (int i = 0; i < 10; ++i) d.add(point({0, 0}, {uniform(rng, -1, 1)}), uniform(rng, -1, 1));
  GpParams p = GpParams::defaults(1, KernelForm::Mixture, 1.0);
  const GpPosterior post = fit(d, p);
  const MixedPoint far = point({1, 2}, {5.0});
  const double s2 = post.transform().scale * post.transform().scale;
  CHECK(post.predict(far).variance == doctest::Approx(prior_covariance(far, far, p) * s2));
  CHECK(post.predict(far).mean == doctest::Approx(post.transform().mean));
}

TEST_CASE("batch prediction agrees with pointwise prediction") {
  Rng rng(6);
  const SearchSpace space({3, 5}, Box::uniform(2, -1, 1));
  const Dataset d = structured_data(space, 25, rng);
  const GpPosterior post = fit(d, testing::random_params(2, rng));
  Eigen::MatrixXd X(4, 2);
  X.setRandom();
  const Eigen::Vector2i h(1, 3);
  const BatchPrediction b = post.predict_batch(h, X);
  for (int i = 0; i < 4; ++i) {
    const Prediction q = post.predict(MixedPoint{h, X.row(i).transpose()});
    CHECK(b.mean[i] == doctest::Approx(q.mean).epsilon(1e-12));
    CHECK(b.variance[i] == doctest::Approx(q.variance).epsilon(1e-10));
  }
}

TEST_CASE("conditioning matches a refit with the same transform") {
  Rng rng(7);
  const SearchSpace space({3, 5}, Box::uniform(2, -1, 1));
  Dataset d = structured_data(space, 20, rng);
  const GpParams p = testing::random_params(2, rng);
  const GpPosterior post = fit(d, p);
  const MixedPoint z = space.sample(rng);
  const GpPosterior extended = post.condition_on(z, 0.7);
  d.add(z, 0.7);
  const GpPosterior refit = fit(d, p, post.transform());
  const MixedPoint q = space.sample(rng);
  CHECK(extended.predict(q).mean == doctest::Approx(refit.predict(q).mean).epsilon(1e-9));
  CHECK(extended.predict(q).variance == doctest::Approx(refit.predict(q).variance).epsilon(1e-9));
}

TEST_CASE("log marginal likelihood against a dense inverse") {
  Rng rng(8);
  const SearchSpace space({3, 5, 4}, Box::uniform(2, -1, 1));
  for (int rep = 0; rep < 5; ++rep) {
    const Dataset d = structured_data(space, 30, rng);
    const GpParams p = testing::random_params(2, rng);
    CHECK(std::abs(log_marginal_likelihood(d, p) - dense_lml(d, p)) < 1e-8);
  }
}

TEST_CASE("pack and unpack are inverse") {
  Rng rng(9);
  const GpParams p = testing::random_params(3, rng);
  const GpParams q = unpack(pack(p), p);
  CHECK((q.mixture.continuous.lengthscales - p.mixture.continuous.lengthscales).norm() < 1e-12);
  CHECK(q.mixture.lambda == p.mixture.lambda);
  CHECK(q.noise_variance == doctest::Approx(p.noise_variance));
  CHECK(HyperLayout::of(p).size() == 7);
  CHECK(HyperLayout::of(GpParams::defaults(3, KernelForm::ContinuousOnly)).size() == 5);
}

TEST_CASE("lml gradient matches central differences") {
  Rng rng(10);
  const SearchSpace space({3, 5}, Box::uniform(2, -1, 1));
  for (int rep = 0; rep < 10; ++rep) {
    const Dataset d = structured_data(space, 25, rng);
    const GpParams p = testing::random_params(2, rng, rep % 2 ? KernelForm::ContinuousOnly : KernelForm::Mixture);
    const Eigen::VectorXd g = lml_gradient(d, p);
    const Eigen::VectorXd v = pack(p);
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      const double h = 1e-5;
      Eigen::VectorXd up = v, down = v;
      up[k] += h;
      down[k] -= h;
      const double fd = (log_marginal_likelihood(d, unpack(up, p)) - log_marginal_likelihood(d, unpack(down, p))) / (2 * h);
      CHECK(testing::relative_error(g[k], fd) < 1e-4);
    }
  }
}

TEST_CASE("huge noise is pushed down on structured data") {
  Dataset d;
  for (int i = 0; i < 30; ++i) {
    const double x = -1 + 2.0 * i / 29;
    d.add(point({i % 2}, {x}), std::sin(3 * x));
  }
  GpParams p = GpParams::defaults(1);
  p.noise_variance = 1.0;
  const int noise = HyperLayout::of(p).noise();
  CHECK(lml_gradient(d, p)[noise] < 0.0);
}

TEST_CASE("gradient projection at the bounds") {
  const HyperLayout layout = HyperLayout::of(GpParams::defaults(1));
  const HyperBounds b = HyperBounds::defaults(layout);
  CHECK(b.lower[layout.lambda()] == 0.0);
  CHECK(b.upper[layout.lambda()] == 1.0);

  Eigen::VectorXd v = pack(GpParams::defaults(1, KernelForm::Mixture, 0.0));
  Eigen::VectorXd g = Eigen::VectorXd::Ones(layout.size());
  g[layout.lambda()] = -2.0;
  CHECK(project_gradient(g, v, b)[layout.lambda()] == 0.0);
  g[layout.lambda()] = 2.0;
  CHECK(project_gradient(g, v, b)[layout.lambda()] == 2.0);
}

TEST_CASE("hyperparameter ascent never loses likelihood") {
  Rng data_rng(12);
  const SearchSpace space({3, 5}, Box::uniform(2, -1, 1));
  const Dataset d = structured_data(space, 30, data_rng);
  const GpParams start = GpParams::defaults(2);
  HyperOptions opt;
  opt.restarts = 1;
  Rng rng(1);
  const HyperResult r = optimize_hyperparameters(d, start, opt, rng);
  CHECK(r.lml >= log_marginal_likelihood(d, start));
  CHECK(r.lml == doctest::Approx(log_marginal_likelihood(d, r.params)));

  // Restarting from the result keeps it.
  Rng rng2(1);
  const HyperResult again = optimize_hyperparameters(d, r.params, opt, rng2);
  CHECK(again.lml >= r.lml);
}

TEST_CASE("hyperparameter optimisation is deterministic") {
  Rng data_rng(13);
  const SearchSpace space({3, 5}, Box::uniform(2, -1, 1));
  const Dataset d = structured_data(space, 30, data_rng);
  HyperOptions opt;
  opt.restarts = 3;
  opt.optimise_lambda = true;
  Rng a(99), b(99);
  const HyperResult ra = optimize_hyperparameters(d, GpParams::defaults(2), opt, a);
  const HyperResult rb = optimize_hyperparameters(d, GpParams::defaults(2), opt, b);
  CHECK(pack(ra.params) == pack(rb.params));
  CHECK(ra.lml == rb.lml);
}

TEST_CASE("lengthscale recovered from a sampled function") {
  Rng rng(14);
  const int n = 150;
  std::vector<MixedPoint> pts;
  for (int i = 0; i < n; ++i) pts.push_back(MixedPoint{Eigen::VectorXi(0), Eigen::VectorXd::Constant(1, uniform(rng, -1, 1))});
  GpParams truth = GpParams::defaults(1, KernelForm::ContinuousOnly);
  truth.mixture.continuous.lengthscales[0] = 0.3;
  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) K(i, j) = matern52(pts[i].x, pts[j].x, truth.mixture.continuous) + (i == j ? 1e-6 : 0.0);
  Eigen::VectorXd u(n);
  for (int i = 0; i < n; ++i) {
    // Box-Muller on the library's portable uniforms.
    const double a = uniform01(rng), b = uniform01(rng);
    u[i] = std::sqrt(-2 * std::log(1 - a)) * std::cos(2 * std::numbers::pi * b);
  }
  const Eigen::VectorXd f = Eigen::LLT<Eigen::MatrixXd>(K).matrixL() * u;
  const Dataset d(pts, std::vector<double>(f.data(), f.data() + n));

  Rng hyper(15);
  const HyperResult r = optimize_hyperparameters(d, GpParams::defaults(1, KernelForm::ContinuousOnly), {}, hyper);
  const double l = r.params.mixture.continuous.lengthscales[0];
  CHECK(l > 0.15);
  CHECK(l < 0.6);
}

TEST_CASE("all restarts failing falls back to the input") {
  Dataset d;
  d.add(point({0}, {0.1}), 1.0);
  d.add(point({1}, {std::numeric_limits<double>::quiet_NaN()}), 2.0);
  const GpParams start = GpParams::defaults(1);
  HyperOptions opt;
  opt.restarts = 3;
  Rng rng(1);
  const HyperResult r = optimize_hyperparameters(d, start, opt, rng);
  CHECK(r.fell_back);
  CHECK(r.failed_restarts == 3);
  CHECK(pack(r.params) == pack(start));
}

}
