#include "cocabo/acquisition.hpp"

#include <algorithm>
#include <numeric>

#include "cocabo/errors.hpp"

namespace cocabo {

namespace {

std::vector<int> first_primes(int count) {
  std::vector<int> primes;
  for (int candidate = 2; static_cast<int>(primes.size()) < count; ++candidate) {
    bool prime = true;
    for (int p : primes) {
      if (p * p > candidate) break;
      if (candidate % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(candidate);
  }
  return primes;
}

double radical_inverse(long index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

}  // namespace

void AcquisitionConfig::validate() const {
  require(kappa >= 0.0, "kappa must be non-negative");
  require(restarts >= 1, "acquisition needs at least one restart");
  require(raw_samples >= restarts, "raw_samples must be at least restarts");
  require(local_steps >= 0, "local_steps must be non-negative");
}

Eigen::VectorXd ucb_batch(const GpPosterior& post, const Eigen::VectorXi& h, const Eigen::MatrixXd& X, double kappa) {
  const BatchPrediction pred = post.predict_batch(h, X);
  return pred.mean.array() + kappa * pred.variance.array().sqrt();
}

Eigen::MatrixXd halton_points(int count, const Box& box, Rng& rng) {
  const int d = box.dim();
  const auto primes = first_primes(d);
  Eigen::VectorXd shift(d);
  for (int k = 0; k < d; ++k) shift[k] = uniform01(rng);
  Eigen::MatrixXd X(count, d);
  for (int i = 0; i < count; ++i) {
    for (int k = 0; k < d; ++k) {
      double u = radical_inverse(i + 1, primes[static_cast<std::size_t>(k)]) + shift[k];
      u -= std::floor(u);
      X(i, k) = box.lower[k] + u * (box.upper[k] - box.lower[k]);
    }
  }
  return X;
}

AcquisitionResult maximize_acquisition(const GpPosterior& post, const Eigen::VectorXi& h, const Box& box,
                                       const AcquisitionConfig& cfg, Rng& rng) {
  cfg.validate();
  const int d = box.dim();
  const Eigen::VectorXd width = box.width();
  require((width.array() > 0.0).all(), "acquisition box must have positive width");

  const Eigen::MatrixXd raw = halton_points(cfg.raw_samples, box, rng);
  const Eigen::VectorXd raw_values = ucb_batch(post, h, raw, cfg.kappa);

  std::vector<int> order(static_cast<std::size_t>(cfg.raw_samples));
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + cfg.restarts, order.end(),
                    [&](int a, int b) { return raw_values[a] > raw_values[b]; });

  const int r = cfg.restarts;
  Eigen::MatrixXd xs(r, d);
  Eigen::VectorXd values(r);
  AcquisitionResult result;
  for (int i = 0; i < r; ++i) {
    xs.row(i) = raw.row(order[static_cast<std::size_t>(i)]);
    values[i] = raw_values[order[static_cast<std::size_t>(i)]];
    result.start_values.push_back(values[i]);
  }

  // Every restart ascends simultaneously so each round is one batched
  // prediction.
  Eigen::VectorXd step = Eigen::VectorXd::Constant(r, 0.05);
  std::vector<bool> active(static_cast<std::size_t>(r), true);
  const Eigen::VectorXd fd_step = 1e-4 * width;

  for (int iter = 0; iter < cfg.local_steps; ++iter) {
    std::vector<int> live;
    for (int i = 0; i < r; ++i)
      if (active[static_cast<std::size_t>(i)]) live.push_back(i);
    if (live.empty()) break;
    const auto m = static_cast<int>(live.size());

    Eigen::MatrixXd probes(2 * d * m, d);
    for (int a = 0; a < m; ++a) {
      for (int k = 0; k < d; ++k) {
        Eigen::RowVectorXd plus = xs.row(live[static_cast<std::size_t>(a)]);
        Eigen::RowVectorXd minus = plus;
        plus[k] = std::min(plus[k] + fd_step[k], box.upper[k]);
        minus[k] = std::max(minus[k] - fd_step[k], box.lower[k]);
        probes.row(2 * (a * d + k)) = plus;
        probes.row(2 * (a * d + k) + 1) = minus;
      }
    }
    const Eigen::VectorXd probe_values = ucb_batch(post, h, probes, cfg.kappa);

    Eigen::MatrixXd directions(m, d);
    for (int a = 0; a < m; ++a) {
      const int i = live[static_cast<std::size_t>(a)];
      for (int k = 0; k < d; ++k) {
        const double dx = probes(2 * (a * d + k), k) - probes(2 * (a * d + k) + 1, k);
        double g = dx > 0.0 ? (probe_values[2 * (a * d + k)] - probe_values[2 * (a * d + k) + 1]) / dx : 0.0;
        if ((xs(i, k) <= box.lower[k] && g < 0.0) || (xs(i, k) >= box.upper[k] && g > 0.0)) g = 0.0;
        directions(a, k) = g * width[k];
      }
      const double norm = directions.row(a).lpNorm<Eigen::Infinity>();
      if (norm > 0.0) {
        directions.row(a) /= norm;
      } else {
        active[static_cast<std::size_t>(i)] = false;
      }
    }

    // Backtracking: all still-searching restarts share one prediction per round.
    std::vector<bool> searching(static_cast<std::size_t>(m));
    for (int a = 0; a < m; ++a) searching[static_cast<std::size_t>(a)] = active[static_cast<std::size_t>(live[static_cast<std::size_t>(a)])];
    for (int back = 0; back < 40; ++back) {
      std::vector<int> trial_rows;
      for (int a = 0; a < m; ++a)
        if (searching[static_cast<std::size_t>(a)]) trial_rows.push_back(a);
      if (trial_rows.empty()) break;
      Eigen::MatrixXd trials(static_cast<Eigen::Index>(trial_rows.size()), d);
      for (std::size_t t = 0; t < trial_rows.size(); ++t) {
        const int a = trial_rows[t];
        const int i = live[static_cast<std::size_t>(a)];
        const Eigen::VectorXd moved =
            xs.row(i).transpose() + step[i] * directions.row(a).transpose().cwiseProduct(width);
        trials.row(static_cast<Eigen::Index>(t)) = box.clamp(moved).transpose();
      }
      const Eigen::VectorXd trial_values = ucb_batch(post, h, trials, cfg.kappa);
      for (std::size_t t = 0; t < trial_rows.size(); ++t) {
        const int a = trial_rows[t];
        const int i = live[static_cast<std::size_t>(a)];
        if (trial_values[static_cast<Eigen::Index>(t)] > values[i]) {
          xs.row(i) = trials.row(static_cast<Eigen::Index>(t));
          values[i] = trial_values[static_cast<Eigen::Index>(t)];
          step[i] = std::min(2.0 * step[i], 0.5);
          searching[static_cast<std::size_t>(a)] = false;
        } else {
          step[i] *= 0.5;
          if (step[i] < 1e-10) {
            active[static_cast<std::size_t>(i)] = false;
            searching[static_cast<std::size_t>(a)] = false;
          }
        }
      }
    }
  }

  Eigen::Index best = 0;
  values.maxCoeff(&best);
  result.x = box.clamp(xs.row(best).transpose());
  result.value = values[best];
  return result;
}

}  // namespace cocabo
