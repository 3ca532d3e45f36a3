#pragma once

#include <Eigen/Dense>

#include "spatrack/common.hpp"

namespace spatrack {

/// Particle representation of the marginal posterior of one potential target
/// over (kinematics, existence, class): J shared kinematic particles, a J x C
/// matrix of per-particle class weights for the "exists" branch, and a scalar
/// mass for the "does not exist" branch. Total mass is kept at one.
struct AugmentedBelief {
  Eigen::Matrix4Xd particles;     // columns are [x, y, vx, vy]
  Eigen::MatrixXd class_weights;  // J x C, nonnegative
  double nonexistence_mass = 1.0;

  int num_particles() const { return static_cast<int>(particles.cols()); }
  int num_classes() const { return static_cast<int>(class_weights.cols()); }
  double existence_mass() const { return class_weights.sum(); }
  /// Class marginal over {1..C} (unnormalized: sums to existence_mass()).
  Eigen::VectorXd class_masses() const { return class_weights.colwise().sum(); }

  /// A belief with all mass on nonexistence and particles at the origin.
  static AugmentedBelief nonexistent(int num_particles, int num_classes);

  /// Throws std::invalid_argument when mass is off unity or weights invalid.
  void validate(double tolerance = 1e-9) const;
};

/// The prediction message has the same particle shape as a belief (it is the
/// prior for the current step, normalized); the particle count may differ
/// because birth particles are appended.
using PredictedMessage = AugmentedBelief;

/// Per-sensor correction factor evaluated at the predicted particles, plus
/// the scalar factor of the nonexistence branch.
struct SensorFactor {
  Eigen::MatrixXd gamma;            // J x C, matches the predicted message
  double nonexistence_scalar = 1.0;
};

}  // namespace spatrack
