#pragma once

#include <string>
#include <utility>
#include <vector>

#include "spatrack/metrics.hpp"
#include "spatrack/model.hpp"
#include "spatrack/random.hpp"

namespace spatrack {

/// One scripted target: alive for birth_step <= n <= death_step, starting on
/// the spawn circle and moving toward the center at constant speed.
struct TargetSpec {
  std::string name;
  int birth_step = 1;
  int death_step = 1;
  Vec2 start_position = Vec2::Zero();
  int class_label = 1;
};

/// The two confusion-matrix parameterizations of the class-sweep study:
/// fixed 0.85 diagonal with 0.15/C off-diagonals, or fixed 0.10
/// off-diagonals with 1 - 0.10 C diagonal (clutter pmf matching in each case).
enum class ConfusionRegime { kFixedDiagonal, kFixedOffDiagonal };

/// Letter variant: 140 steps, deaths at 120/130. Extended variant: 150
/// steps, deaths at 140/150.
enum class ScenarioVariant { kLetter, kExtended };

struct ScenarioOptions {
  int num_classes = 3;                     // C in {1, 2, 3, 6}
  int num_sensors = 1;                     // S in {1, 2}
  double clutter_mean = 10.0;              // mu per sensor per scan
  ConfusionRegime regime = ConfusionRegime::kFixedDiagonal;
  ScenarioVariant variant = ScenarioVariant::kLetter;
  double sigma_range = 5.0;                // m
  double sigma_bearing_deg = 0.1;          // degrees, converted internally
  double detection_prob = 0.9;
  Rect roi{-200.0, 200.0, -150.0, 150.0};
  double spawn_radius = 150.0;             // m
  double sensor_radius = 3000.0;           // m
  double speed = 1.0;                      // m/s
  double step_seconds = 2.0;
  double turn_angle_deg = -60.0;           // right turn
  int turn_onset_step = -1;                // -1: first step within one step length of center
  double class_stay_prob = 0.95;
};

/// Ground-truth scenario: scripted trajectories plus the sensor suite.
struct Scenario {
  std::vector<TargetSpec> targets;
  Rect roi;
  int num_steps = 140;
  double step_seconds = 2.0;
  double speed = 1.0;
  double turn_angle = 0.0;  // rad, negative = right turn
  int turn_onset_step = 0;
  std::vector<SensorModel> sensors;
  int num_classes = 1;
  ClassTransitionMatrix class_transitions{Eigen::MatrixXd::Ones(1, 1)};

  bool alive(int target, int n) const;
  Vec2 position(int target, int n) const;
  Vec2 velocity(int target, int n) const;
  /// Labeled truth positions of all alive targets at step n.
  PointSet truth_at(int n) const;
  PointSequence truth_sequence() const;  // steps 1..num_steps
  double duration_seconds() const { return num_steps * step_seconds; }
};

/// Confusion matrix and clutter verdict pmf for a class-count sweep regime.
std::pair<ConfusionMatrix, ClutterClassPmf> build_supplementary_confusions(
    int num_classes, ConfusionRegime regime);

/// Six targets spawn evenly on a 150 m circle, head to the center at 1 m/s
/// and turn right by 60 degrees on arrival; sensors sit evenly on a 3 km
/// circle. Class labels cycle through {1..C}.
Scenario build_paper_scenario(const ScenarioOptions& options);

/// Measurements of one sensor at one step: detections with sampled classifier
/// verdicts plus Poisson clutter, in randomized order. `origins` keeps the
/// generating target index (-1 for clutter) aligned with `measurements`.
struct MeasurementFrame {
  int time = 0;
  int sensor = 0;
  std::vector<AugmentedMeasurement> measurements;
  std::vector<int> origins;
};

MeasurementFrame generate_frame(const Scenario& scenario, int n, int sensor_index,
                                RandomStream& rng);

}  // namespace spatrack
