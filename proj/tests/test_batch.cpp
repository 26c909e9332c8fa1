#include <doctest.h>

#include "cocabo/batch.hpp"
#include "test_util.hpp"

using namespace cocabo;
using cocabo::testing::point;

namespace {

GpPosterior seeded_posterior(const SearchSpace& space, int n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  for (int i = 0; i < n; ++i) {
    MixedPoint z = space.sample(rng);
    const double f = std::cos(4 * z.x[0]) + 0.3 * z.h.sum();
    d.add(std::move(z), f);
  }
  GpParams p = GpParams::defaults(space.num_continuous());
  p.mixture.continuous.lengthscales.setConstant(0.3);
  return fit(d, p);
}

bool pairwise_distinct(const std::vector<MixedPoint>& pts) {
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if (pts[i] == pts[j]) return false;
  return true;
}

}  // namespace

TEST_SUITE("batch") {

TEST_CASE("grouping of categorical batches") {
  const Eigen::Vector2i u1(0, 1), u2(2, 0), u3(1, 1), u4(0, 0);
  const auto a = group_unique({u1, u2, u3, u4});
  CHECK(a.size() == 4);
  for (const auto& g : a) CHECK(g.count == 1);

  const auto b = group_unique({u1, u1, u2, u3});
  REQUIRE(b.size() == 3);
  CHECK(b[0].u == u1);
  CHECK(b[0].count == 2);
  CHECK(b[1].u == u2);
  CHECK(b[1].count == 1);
  CHECK(b[2].u == u3);
  CHECK(b[2].count == 1);

  const auto c = group_unique({u2});
  REQUIRE(c.size() == 1);
  CHECK(c[0].count == 1);
}

TEST_CASE("kriging believer with one pick is a plain maximisation") {
  const SearchSpace space({3}, Box::uniform(1, -1, 1));
  const GpPosterior post = seeded_posterior(space, 10, 1);
  const Eigen::VectorXi u = Eigen::VectorXi::Constant(1, 2);
  Rng a(5), b(5);
  const BeliefResult r = kriging_believer(post, u, 1, space.bounds(), {}, a);
  const AcquisitionResult direct = maximize_acquisition(post, u, space.bounds(), {}, b);
  REQUIRE(r.xs.size() == 1);
  CHECK(r.xs[0] == direct.x);
}

TEST_CASE("kriging believer separates repeated picks") {
  const SearchSpace space({3}, Box::uniform(1, -1, 1));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GpPosterior post = seeded_posterior(space, 10, seed);
    const Eigen::VectorXi u = Eigen::VectorXi::Constant(1, 1);
    Rng rng(seed);
    const BeliefResult r = kriging_believer(post, u, 2, space.bounds(), {}, rng);
    REQUIRE(r.xs.size() == 2);
    CHECK(std::abs(r.xs[0][0] - r.xs[1][0]) > 1e-6 * 2.0);
    // The first pick is believed, so its variance collapses to the noise level.
    const double before = post.predict(MixedPoint{u, r.xs[0]}).variance;
    const double after = r.posterior.predict(MixedPoint{u, r.xs[0]}).variance;
    CHECK(after < before);
    CHECK(after <= post.params().noise_variance * post.transform().scale * post.transform().scale * 1.01);
  }
}

TEST_CASE("assembled batch follows the group shape") {
  const SearchSpace space({3, 5}, Box::uniform(2, -1, 1));
  const GpPosterior post = seeded_posterior(space, 15, 3);
  const Eigen::Vector2i u1(0, 1), u2(2, 3), u3(1, 4);
  Rng rng(4);
  const auto batch = assemble_batch(post, {u1, u1, u2, u3}, space.bounds(), {}, rng);
  REQUIRE(batch.size() == 4);
  CHECK(std::count_if(batch.begin(), batch.end(), [&](const MixedPoint& z) { return z.h == u1; }) == 2);
  CHECK(std::count_if(batch.begin(), batch.end(), [&](const MixedPoint& z) { return z.h == u2; }) == 1);
  CHECK(std::count_if(batch.begin(), batch.end(), [&](const MixedPoint& z) { return z.h == u3; }) == 1);
  CHECK(pairwise_distinct(batch));
  for (const auto& z : batch) CHECK(space.contains(z));
}

TEST_CASE("seeded batches are unique") {
  const SearchSpace wide({3, 5}, Box::uniform(2, -1, 1));
  const SearchSpace narrow({2}, Box::uniform(1, 0, 1));
  for (const SearchSpace* space : {&wide, &narrow}) {
    const GpPosterior post = seeded_posterior(*space, 12, 7);
    MultiAgentState bandits = MultiAgentState::fresh(space->choices(), 40);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed);
      const auto batch = select_batch(post, bandits, 4, space->bounds(), {}, rng);
      REQUIRE(batch.size() == 4);
      CHECK(pairwise_distinct(batch));
      std::vector<Eigen::VectorXi> H;
      for (const auto& z : batch) H.push_back(z.h);
      int total = 0;
      for (const auto& g : group_unique(H)) total += g.count;
      CHECK(total == 4);
    }
  }
}

}
