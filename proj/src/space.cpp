#include "cocabo/space.hpp"

#include <limits>
#include <string>

#include "cocabo/errors.hpp"

namespace cocabo {

bool operator==(const MixedPoint& a, const MixedPoint& b) {
  return a.h.size() == b.h.size() && a.x.size() == b.x.size() && a.h == b.h && a.x == b.x;
}

Box Box::uniform(int dim, double lo, double hi) {
  return Box{Eigen::VectorXd::Constant(dim, lo), Eigen::VectorXd::Constant(dim, hi)};
}

bool Box::contains(const Eigen::VectorXd& x) const {
  if (x.size() != lower.size()) return false;
  return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

Eigen::VectorXd Box::clamp(const Eigen::VectorXd& x) const {
  return x.cwiseMax(lower).cwiseMin(upper);
}

SearchSpace::SearchSpace(std::vector<int> choices, Box bounds)
    : choices_(std::move(choices)), bounds_(std::move(bounds)) {
  for (int n : choices_) require(n >= 1, "every categorical variable needs at least one choice");
  require(bounds_.dim() >= 1, "search space needs at least one continuous dimension");
  require(bounds_.upper.size() == bounds_.lower.size(), "bounds dimension mismatch");
  require((bounds_.upper.array() > bounds_.lower.array()).all(), "bounds must satisfy lower < upper");
}

std::size_t SearchSpace::combinations() const {
  std::size_t total = 1;
  for (int n : choices_) {
    if (total > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(n))
      return std::numeric_limits<std::size_t>::max();
    total *= static_cast<std::size_t>(n);
  }
  return total;
}

bool SearchSpace::contains(const MixedPoint& z) const {
  if (z.h.size() != num_categorical() || !bounds_.contains(z.x)) return false;
  for (int j = 0; j < num_categorical(); ++j)
    if (z.h[j] < 0 || z.h[j] >= choices_[j]) return false;
  return true;
}

void SearchSpace::check(const MixedPoint& z) const {
  require(z.h.size() == num_categorical(),
          "expected " + std::to_string(num_categorical()) + " categorical values, got " +
              std::to_string(z.h.size()));
  require(z.x.size() == num_continuous(),
          "expected " + std::to_string(num_continuous()) + " continuous values, got " +
              std::to_string(z.x.size()));
  require(contains(z), "point lies outside the search space");
}

MixedPoint SearchSpace::sample(Rng& rng) const {
  MixedPoint z{Eigen::VectorXi(num_categorical()), Eigen::VectorXd(num_continuous())};
  for (int j = 0; j < num_categorical(); ++j) z.h[j] = uniform_index(rng, choices_[j]);
  for (int i = 0; i < num_continuous(); ++i)
    z.x[i] = uniform(rng, bounds_.lower[i], bounds_.upper[i]);
  return z;
}

Dataset::Dataset(std::vector<MixedPoint> points, std::vector<double> values) {
  require(points.size() == values.size(), "points and values differ in length");
  for (std::size_t i = 0; i < points.size(); ++i) add(std::move(points[i]), values[i]);
}

void Dataset::add(MixedPoint z, double value) {
  if (!points_.empty()) {
    require(z.h.size() == points_.front().h.size() && z.x.size() == points_.front().x.size(),
            "observation does not match the dataset's dimensions");
  }
  points_.push_back(std::move(z));
  values_.push_back(value);
  if (values_.size() == 1 || value > values_[best_index_]) best_index_ = values_.size() - 1;
}

Eigen::VectorXd Dataset::values() const {
  return Eigen::Map<const Eigen::VectorXd>(values_.data(), static_cast<Eigen::Index>(values_.size()));
}

double Dataset::best_value() const {
  require(!values_.empty(), "best_value of an empty dataset");
  return values_[best_index_];
}

}  // namespace cocabo
