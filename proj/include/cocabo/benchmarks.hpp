#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cocabo/optimizer.hpp"

namespace cocabo {

// Standard analytic forms, evaluated directly on the given coordinates.
double beale(const Eigen::VectorXd& x);
double six_hump_camel(const Eigen::VectorXd& x);
double rosenbrock(const Eigen::VectorXd& x);
double ackley(const Eigen::VectorXd& z);

/// -(term(h1) + term(h2)); h1 over {ros, cam, bea}, h2 over
/// {ros, cam, bea, bea, bea}; x in [-1, 1]^2.
double func2c(const Eigen::VectorXi& h, const Eigen::VectorXd& x);
/// func2c plus a third variable over {5 cam, 2 ros, 2 bea, 3 bea}.
double func3c(const Eigen::VectorXi& h, const Eigen::VectorXd& x);

/// Coordinate encoded by Ackley category index j (0-based): -1 + 0.125 j.
inline double ackley_category_value(int index) { return -1.0 + 0.125 * index; }
/// -ackley(z_1..z_c, x) with each z_i decoded from its 17-way category.
double ackley_cc(const Eigen::VectorXi& h, const Eigen::VectorXd& x);

struct SyntheticTask {
  std::string name;
  SearchSpace space;
  Objective evaluate;
};

std::vector<std::string> synthetic_task_names();
/// Throws ContractViolation for unknown names.
SyntheticTask make_task(const std::string& name);

struct TaskOptimum {
  Eigen::VectorXi h;
  Eigen::VectorXd x;
  double value = 0.0;
};

/// Exhaustive maximum over every categorical combination and a regular
/// `resolution`-per-axis grid of the box. Ties keep the first maximiser in
/// lexicographic order.
TaskOptimum grid_optimum(const SyntheticTask& task, int resolution = 201);

/// Concatenated one-hot blocks, one per categorical variable.
Eigen::VectorXd onehot_encode(const Eigen::VectorXi& h, const std::vector<int>& choices);
/// Per-block argmax (first maximum on ties).
Eigen::VectorXi onehot_decode(const Eigen::VectorXd& v, const std::vector<int>& choices);

/// Same initial design as CoCaBO for a given seed, then budget * batch_size
/// uniform draws.
RunHistory random_baseline(const RunConfig& cfg, const Objective& objective, RunObserver* observer = nullptr);

/// GP-UCB with a Matérn 5/2 ARD kernel over [x, onehot(h)]; the acquisition
/// is maximised over the relaxation [box] x [0,1]^(sum N) and the proposal's
/// blocks are decoded by argmax. Batches use Kriging Believer.
RunHistory onehot_bo_baseline(const RunConfig& cfg, const Objective& objective, RunObserver* observer = nullptr);

/// Mean log N(y | mu, var + noise) over test points, in target units.
double predictive_log_likelihood(const GpPosterior& post, const std::vector<MixedPoint>& points,
                                 const Eigen::VectorXd& values);

struct SurrogateScore {
  std::vector<double> per_seed;  // NaN where the fit failed
  double mean = 0.0;
  double standard_error = 0.0;
  int failures = 0;
};

struct SurrogateQuality {
  SurrogateScore cocabo;
  SurrogateScore onehot;
};

/// Fits a CoCaBO (lambda learnt) and a one-hot surrogate on the same uniform
/// training sample per seed and scores both on a uniform test sample.
SurrogateQuality surrogate_quality_experiment(const SyntheticTask& task, int n_train = 250, int n_test = 100,
                                              int seeds = 20, std::uint64_t master_seed = 0,
                                              const HyperOptions& options = {});

}  // namespace cocabo
