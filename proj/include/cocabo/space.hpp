#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "cocabo/random.hpp"

namespace cocabo {

/// One candidate z = [h, x]: categorical indices (0-based) and continuous
/// coordinates.
struct MixedPoint {
  Eigen::VectorXi h;
  Eigen::VectorXd x;
};

bool operator==(const MixedPoint& a, const MixedPoint& b);

/// Axis-aligned box for the continuous subspace.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static Box uniform(int dim, double lo, double hi);

  int dim() const { return static_cast<int>(lower.size()); }
  Eigen::VectorXd width() const { return upper - lower; }
  bool contains(const Eigen::VectorXd& x) const;
  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const;
};

class SearchSpace {
 public:
  SearchSpace() = default;
  /// `choices[j]` is N_j; bounds describe the d continuous dimensions (d >= 1).
  SearchSpace(std::vector<int> choices, Box bounds);

  int num_categorical() const { return static_cast<int>(choices_.size()); }
  int num_continuous() const { return bounds_.dim(); }
  const std::vector<int>& choices() const { return choices_; }
  const Box& bounds() const { return bounds_; }

  /// Number of categorical combinations; saturates at SIZE_MAX.
  std::size_t combinations() const;

  bool contains(const MixedPoint& z) const;
  /// Throws ContractViolation when z does not conform.
  void check(const MixedPoint& z) const;

  MixedPoint sample(Rng& rng) const;

 private:
  std::vector<int> choices_;
  Box bounds_;
};

/// Ordered observations with best-so-far tracking (maximisation).
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<MixedPoint> points, std::vector<double> values);

  void add(MixedPoint z, double value);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const MixedPoint& point(std::size_t i) const { return points_[i]; }
  double value(std::size_t i) const { return values_[i]; }
  const std::vector<MixedPoint>& points() const { return points_; }
  Eigen::VectorXd values() const;

  double best_value() const;
  std::size_t best_index() const { return best_index_; }

 private:
  std::vector<MixedPoint> points_;
  std::vector<double> values_;
  std::size_t best_index_ = 0;
};

}  // namespace cocabo
