#pragma once

#include <Eigen/Dense>
#include <vector>

#include "spatrack/association.hpp"
#include "spatrack/belief.hpp"
#include "spatrack/model.hpp"
#include "spatrack/random.hpp"

namespace spatrack {

struct TrackerParams {
  int num_targets = 20;        // K, fixed number of potential targets
  int num_particles = 3000;    // J
  int birth_particles = 300;   // drawn fresh each prediction step
  int bp_max_iterations = 20;  // P
  double bp_tolerance = 1e-6;
  double detection_threshold = 0.5;  // P_th
  bool classifier_enabled = true;    // false: classifier factors replaced by 1
};

/// One prediction step: survival propagation with class mixing through D,
/// death mass into the nonexistence branch, and fresh birth particles with
/// uniform class weights. The output carries J + birth_particles particles
/// and stays normalized to total mass one.
PredictedMessage predict(const AugmentedBelief& prev, const MotionModel& motion,
                         const ClassTransitionMatrix& transitions, int birth_particles,
                         RandomStream& rng);

/// Likelihood ratios of all measurements against all predicted particles of
/// one potential target, kept in the factorized form
///   ratio(j, c, m) = kinematic(j, m) * classifier(m, c),
/// scaled by exp(-log_scale) so the largest entry is one. Scaling by the
/// per-target maximum keeps the association messages away from underflow;
/// it rescales the full beta row and gamma table uniformly, which the
/// belief normalization cancels.
struct LikelihoodTable {
  Eigen::MatrixXd kinematic;   // J x M
  Eigen::MatrixXd classifier;  // M x C
  double log_scale = 0.0;

  int num_measurements() const { return static_cast<int>(kinematic.cols()); }
  double scaled_ratio(int particle, int class_index, int measurement) const {
    return kinematic(particle, measurement) * classifier(measurement, class_index - 1);
  }
  /// Multiplies the miss / nonexistence terms so the whole row shares one scale.
  double miss_scale() const { return std::exp(-log_scale); }
};

/// Builds the ratio table. With `subtract_max` the table is rescaled by the
/// maximum log ratio; without it the entries are the exact ratios. Throws,
/// naming the measurement index, when a measurement falls outside the
/// clutter support (the ratio would be infinite).
LikelihoodTable build_likelihood_table(const PredictedMessage& pred,
                                       const std::vector<AugmentedMeasurement>& measurements,
                                       const SensorModel& sensor, bool classifier_enabled,
                                       bool subtract_max = true);

/// Association evidence beta(a) for a in {0..M}:
///   beta(0) = sum_{j,c} (1 - P_d) w_{j,c} + nonexistence mass,
///   beta(m) = sum_{j,c} P_d ratio(j, c, m) w_{j,c},
/// in the scale carried by the table. Throws on non-finite entries.
Eigen::VectorXd measurement_evaluation(const PredictedMessage& pred,
                                       const LikelihoodTable& table,
                                       const SensorModel& sensor);

/// Convenience overload evaluating exact (unscaled) ratios.
Eigen::VectorXd measurement_evaluation(const PredictedMessage& pred,
                                       const std::vector<AugmentedMeasurement>& measurements,
                                       const SensorModel& sensor,
                                       bool classifier_enabled = true);

/// Measurement update: gamma(j, c) = (1 - P_d) eta(0) + sum_m P_d ratio eta(m),
/// with the nonexistence branch scalar eta(0) (both in the table's scale).
SensorFactor measurement_update(const PredictedMessage& pred, const LikelihoodTable& table,
                                const Eigen::VectorXd& eta, const SensorModel& sensor);

/// Multiplies the prediction with all per-sensor factors, renormalizes, and
/// resamples the flattened (particle, class) table back to `out_particles`
/// one-hot atoms. Zero total evidence resets the belief to nonexistence.
AugmentedBelief fuse_and_normalize(const PredictedMessage& pred,
                                   const std::vector<SensorFactor>& factors, int out_particles,
                                   RandomStream& rng);

/// One full filter step over all potential targets and sensors.
std::vector<AugmentedBelief> step(const std::vector<AugmentedBelief>& beliefs,
                                  const std::vector<std::vector<AugmentedMeasurement>>& frames,
                                  const std::vector<SensorModel>& sensors,
                                  const MotionModel& motion,
                                  const ClassTransitionMatrix& transitions,
                                  const TrackerParams& params, RandomStream& rng);

/// Owns the per-target beliefs and the random stream of one tracker instance.
class Tracker {
 public:
  Tracker(TrackerParams params, MotionModel motion, ClassTransitionMatrix transitions,
          std::vector<SensorModel> sensors, std::uint64_t seed);

  /// Advances one time step with one measurement list per sensor.
  void advance(const std::vector<std::vector<AugmentedMeasurement>>& frames);

  const std::vector<AugmentedBelief>& beliefs() const { return beliefs_; }
  const TrackerParams& params() const { return params_; }
  const std::vector<SensorModel>& sensors() const { return sensors_; }

 private:
  TrackerParams params_;
  MotionModel motion_;
  ClassTransitionMatrix transitions_;
  std::vector<SensorModel> sensors_;
  RandomStream rng_;
  std::vector<AugmentedBelief> beliefs_;
};

}  // namespace spatrack
