#include "cocabo/batch.hpp"

#include "cocabo/errors.hpp"

namespace cocabo {

namespace {

constexpr double kCoincidence = 1e-6;
constexpr double kNudge = 1e-3;

bool coincides(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& width) {
  return ((a - b).array().abs() / width.array()).maxCoeff() <= kCoincidence;
}

bool clashes(const Eigen::VectorXi& u, const Eigen::VectorXd& x, std::span<const MixedPoint> taken,
             const std::vector<Eigen::VectorXd>& picked, const Eigen::VectorXd& width) {
  for (const auto& z : taken)
    if (z.h == u && coincides(z.x, x, width)) return true;
  for (const auto& p : picked)
    if (coincides(p, x, width)) return true;
  return false;
}

Eigen::VectorXd nudge(const Eigen::VectorXd& x, const Box& box, Rng& rng) {
  const Eigen::VectorXd width = box.width();
  Eigen::VectorXd out = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    double delta = (uniform01(rng) < 0.5 ? -1.0 : 1.0) * kNudge * width[k];
    if (out[k] + delta > box.upper[k] || out[k] + delta < box.lower[k]) delta = -delta;
    out[k] += delta;
  }
  return box.clamp(out);
}

}  // namespace

std::vector<UniqueGroup> group_unique(const std::vector<Eigen::VectorXi>& H) {
  require(!H.empty(), "batch must contain at least one categorical vector");
  std::vector<UniqueGroup> groups;
  for (const auto& h : H) {
    bool found = false;
    for (auto& g : groups) {
      if (g.u.size() == h.size() && g.u == h) {
        ++g.count;
        found = true;
        break;
      }
    }
    if (!found) groups.push_back({h, 1});
  }
  return groups;
}

BeliefResult kriging_believer(const GpPosterior& post, const Eigen::VectorXi& u, int count, const Box& box,
                              const AcquisitionConfig& cfg, Rng& rng, std::span<const MixedPoint> taken) {
  require(count >= 1, "Kriging Believer needs at least one point");
  const Eigen::VectorXd width = box.width();
  BeliefResult out{{}, post};
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd x = maximize_acquisition(out.posterior, u, box, cfg, rng).x;
    for (int attempt = 0; attempt < 100 && clashes(u, x, taken, out.xs, width); ++attempt) x = nudge(x, box, rng);
    out.xs.push_back(x);
    if (i + 1 < count) {
      const MixedPoint z{u, x};
      out.posterior = out.posterior.condition_on(z, out.posterior.predict(z).mean);
    }
  }
  // Keep the last pick's belief too, so later groups see every batch member.
  const MixedPoint last{u, out.xs.back()};
  out.posterior = out.posterior.condition_on(last, out.posterior.predict(last).mean);
  return out;
}

std::vector<MixedPoint> assemble_batch(const GpPosterior& post, const std::vector<Eigen::VectorXi>& H, const Box& box,
                                       const AcquisitionConfig& cfg, Rng& rng) {
  const auto groups = group_unique(H);
  std::vector<MixedPoint> batch;
  batch.reserve(H.size());
  GpPosterior believed = post;
  for (const auto& g : groups) {
    BeliefResult kb = kriging_believer(believed, g.u, g.count, box, cfg, rng, batch);
    for (auto& x : kb.xs) batch.push_back({g.u, std::move(x)});
    believed = std::move(kb.posterior);
  }
  return batch;
}

std::vector<MixedPoint> select_batch(const GpPosterior& post, const MultiAgentState& bandits, int batch_size,
                                     const Box& box, const AcquisitionConfig& cfg, Rng& rng) {
  return assemble_batch(post, multi_agent_select_batch(bandits, batch_size, rng), box, cfg, rng);
}

}  // namespace cocabo
