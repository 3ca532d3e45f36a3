#pragma once

#include <Eigen/Dense>
#include <utility>

#include "spatrack/common.hpp"

namespace spatrack {

/// Planar position/velocity state.
struct KinematicState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();

  Vec4 as_vector() const {
    Vec4 v;
    v << position, velocity;
    return v;
  }
  static KinematicState from_vector(const Vec4& v) {
    return {v.head<2>(), v.tail<2>()};
  }
};

/// Kinematic state augmented with an existence flag and a class index.
/// The class index is carried (as a dummy) even while the target does not
/// exist, so it is always in {1, ..., C}.
struct AugmentedState {
  KinematicState kinematics;
  bool exists = false;
  int class_index = 1;
};

/// Column-stochastic C x C matrix; entry (i, j) is the probability that an
/// existing target of class j+1 transitions to class i+1.
class ClassTransitionMatrix {
 public:
  explicit ClassTransitionMatrix(Eigen::MatrixXd entries);

  /// Diagonal `stay_prob`, remaining mass split evenly over the other classes.
  static ClassTransitionMatrix uniform_diagonal(int num_classes, double stay_prob);

  int num_classes() const { return static_cast<int>(entries_.cols()); }
  /// Probability of moving to `next_class` from `prev_class` (both 1-based).
  double prob(int next_class, int prev_class) const;
  Eigen::VectorXd column(int prev_class) const;
  const Eigen::MatrixXd& matrix() const { return entries_; }

 private:
  Eigen::MatrixXd entries_;
};

/// Column-stochastic (C+1) x C matrix; entry (i, j) is the probability that
/// the classifier outputs verdict i (0 meaning "clutter") for a measurement
/// generated by a target of class j+1.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(Eigen::MatrixXd entries);

  int num_classes() const { return static_cast<int>(entries_.cols()); }
  /// verdict in {0, ..., C}, target_class in {1, ..., C}.
  double prob(int verdict, int target_class) const;
  Eigen::VectorXd column(int target_class) const;
  const Eigen::MatrixXd& matrix() const { return entries_; }

 private:
  Eigen::MatrixXd entries_;
};

/// Distribution of classifier verdicts on clutter-generated measurements.
class ClutterClassPmf {
 public:
  explicit ClutterClassPmf(Eigen::VectorXd probabilities);

  int num_classes() const { return static_cast<int>(probabilities_.size()) - 1; }
  double prob(int verdict) const;
  const Eigen::VectorXd& vector() const { return probabilities_; }

 private:
  Eigen::VectorXd probabilities_;
};

/// Range/bearing measurement with the classifier verdict attached.
struct AugmentedMeasurement {
  double range = 0.0;        // m
  double bearing = 0.0;      // rad, wrapped to (-pi, pi]
  int class_estimate = 0;    // zeta in {0, ..., C}; 0 = "clutter"
};

/// A range/bearing sensor with its clutter and classifier models.
struct SensorModel {
  Vec2 position = Vec2::Zero();   // m
  double sigma_range = 1.0;       // m
  double sigma_bearing = 1e-3;    // rad
  double detection_prob = 0.9;
  double clutter_mean = 0.0;      // Poisson mean per scan
  Rect roi;
  ConfusionMatrix confusion;
  ClutterClassPmf clutter_class_pmf;

  void validate() const;  // throws std::invalid_argument on violations
};

/// Nearly-constant-velocity motion plus the existence (survival/birth) model.
struct MotionModel {
  Eigen::Matrix4d transition = Eigen::Matrix4d::Identity();          // A
  Eigen::Matrix<double, 4, 2> noise_gain = Eigen::Matrix<double, 4, 2>::Zero();  // W
  double accel_std = 0.1;         // m/s^2 per component
  double step_seconds = 2.0;
  double survival_prob = 0.999;   // p_s
  double birth_prob = 0.01;       // p_b
  Rect birth_region;              // uniform position part of the birth pdf
  double birth_velocity_std = 1.0;  // m/s per component, zero-mean Gaussian

  /// Discrete white-noise-acceleration A and W for the given step duration.
  static MotionModel nearly_constant_velocity(double step_seconds, double accel_std);

  void validate() const;
};

/// Density of the process noise that maps x_prev to x_next through
/// x_next = A x_prev + W u, evaluated in the 2-D noise space (zero when
/// x_next is not reachable). The dynamics are class independent; the class
/// argument is part of the interface so class-dependent models can slot in.
double kinematic_transition_density(const KinematicState& x_next,
                                    const KinematicState& x_prev,
                                    const MotionModel& model,
                                    int class_index = 1);

/// Class pmf after one transition: uniform when the target did not exist,
/// otherwise column `prev_class` of D (state independent in this model).
Eigen::VectorXd class_transition_pmf(bool prev_exists, int prev_class,
                                     const KinematicState& x_prev,
                                     const ClassTransitionMatrix& transitions);

/// Predicted (range, bearing) of a state as seen from a sensor.
std::pair<double, double> predicted_range_bearing(const KinematicState& x,
                                                  const SensorModel& sensor);

/// Gaussian likelihood of a range/bearing measurement given a state, with the
/// bearing residual wrapped to (-pi, pi]. Returns 0 when the state coincides
/// with the sensor position (undefined bearing).
double measurement_likelihood(double range, double bearing,
                              const KinematicState& x, const SensorModel& sensor);

/// Clutter density over (range, bearing): proportional to range inside the
/// image of the ROI and zero outside. The polar map around the sensor has
/// Jacobian r, so the normalized density is r / area(ROI) on its support.
double clutter_density(double range, double bearing, const SensorModel& sensor);

/// The per-measurement factor of the association likelihood for an existing
/// target: G[zeta][class] * f(q | x) / (mu * p0[zeta] * f0(q)).
double augmented_likelihood_ratio(const AugmentedMeasurement& z,
                                  const KinematicState& x, int class_index,
                                  const SensorModel& sensor);

/// log of augmented_likelihood_ratio; -inf when the ratio is zero. Throws on
/// a degenerate clutter model (zero denominator with positive numerator).
double augmented_log_likelihood_ratio(const AugmentedMeasurement& z,
                                      const KinematicState& x, int class_index,
                                      const SensorModel& sensor);

/// log(G[verdict][class] / p0[verdict]); the classifier part of the ratio.
double classifier_log_ratio(int verdict, int class_index,
                            const ConfusionMatrix& confusion,
                            const ClutterClassPmf& clutter_pmf);

}  // namespace spatrack
