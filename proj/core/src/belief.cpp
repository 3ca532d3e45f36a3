#include "spatrack/belief.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "spatrack/random.hpp"

namespace spatrack {

AugmentedBelief AugmentedBelief::nonexistent(int num_particles, int num_classes) {
  AugmentedBelief b;
  b.particles = Eigen::Matrix4Xd::Zero(4, num_particles);
  b.class_weights = Eigen::MatrixXd::Zero(num_particles, num_classes);
  b.nonexistence_mass = 1.0;
  return b;
}

void AugmentedBelief::validate(double tolerance) const {
  if (particles.cols() < 1) {
    throw std::invalid_argument("AugmentedBelief: at least one particle required");
  }
  if (class_weights.rows() != particles.cols() || class_weights.cols() < 1) {
    throw std::invalid_argument("AugmentedBelief: class weight shape mismatch");
  }
  if (!particles.allFinite() || !class_weights.allFinite()) {
    throw std::invalid_argument("AugmentedBelief: non-finite entries");
  }
  if ((class_weights.array() < 0.0).any() || nonexistence_mass < 0.0) {
    throw std::invalid_argument("AugmentedBelief: negative mass");
  }
  const double total = class_weights.sum() + nonexistence_mass;
  if (std::abs(total - 1.0) > tolerance) {
    throw std::invalid_argument("AugmentedBelief: total mass " + std::to_string(total) +
                                " deviates from 1");
  }
}

std::vector<int> systematic_resample(const Eigen::VectorXd& weights, int count, double u01) {
  const double total = weights.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::invalid_argument("systematic_resample: total weight must be positive");
  }
  if (count < 1) throw std::invalid_argument("systematic_resample: count must be >= 1");
  std::vector<int> indices;
  indices.reserve(count);
  const double step = total / count;
  double threshold = u01 * step;
  double cumulative = 0.0;
  int i = 0;
  const int n = static_cast<int>(weights.size());
  while (static_cast<int>(indices.size()) < count) {
    while (i < n - 1 && cumulative + weights[i] < threshold) {
      cumulative += weights[i];
      ++i;
    }
    indices.push_back(i);
    threshold += step;
  }
  return indices;
}

}  // namespace spatrack
