#pragma once

#include <Eigen/Dense>
#include <vector>

#include "spatrack/belief.hpp"

namespace spatrack {

/// A detected potential target at one time step. The persistent label is the
/// potential-target index, which the filter maintains across time.
struct TrackEstimate {
  int pt_index = 0;
  int time = 0;
  Vec2 position = Vec2::Zero();     // m
  Vec2 velocity = Vec2::Zero();     // m/s
  double existence_prob = 0.0;
  Eigen::VectorXd class_pmf;
  int label = 0;
};

/// Emits one estimate per potential target whose existence probability
/// exceeds the threshold: existence-conditioned mean kinematics and the
/// normalized class marginal.
std::vector<TrackEstimate> detect_and_estimate(const std::vector<AugmentedBelief>& beliefs,
                                               double threshold, int time_index = 0);

}  // namespace spatrack
