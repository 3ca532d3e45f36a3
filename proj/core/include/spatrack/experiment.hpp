#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spatrack/engine.hpp"
#include "spatrack/metrics.hpp"
#include "spatrack/simulator.hpp"

namespace spatrack {

/// Everything needed to run a seeded Monte Carlo batch: scenario parameters,
/// tracker parameters, and run/output control. Loadable from a flat
/// `section.key = value` config file; see configs/ for canonical examples.
struct ExperimentConfig {
  // scenario
  int num_classes = 3;
  int num_sensors = 1;
  double clutter_mean = 10.0;
  ConfusionRegime regime = ConfusionRegime::kFixedDiagonal;
  ScenarioVariant variant = ScenarioVariant::kLetter;
  Rect roi{-200.0, 200.0, -150.0, 150.0};
  double spawn_radius_m = 150.0;
  double sensor_radius_m = 3000.0;
  double speed_mps = 1.0;
  double step_seconds = 2.0;
  double turn_angle_deg = -60.0;
  int turn_onset_step = -1;
  double class_stay_prob = 0.95;

  // sensor
  double sigma_range_m = 5.0;
  double sigma_bearing_deg = 0.1;
  double detection_prob = 0.9;

  // tracker
  int num_pts = 20;              // K
  int particles = 3000;          // J
  int birth_particles = 300;
  int bp_iterations = 20;        // P
  double bp_tolerance = 1e-6;
  double detection_threshold = 0.5;  // P_th
  double survival_prob = 0.999;      // p_s
  double birth_prob = 0.01;          // p_b
  double accel_std_mps2 = 0.1;
  double birth_velocity_std_mps = 1.0;
  bool classifier_enabled = true;
  bool run_baseline = true;  // also run the classifier-free tracker

  // run control
  int num_runs = 1;
  std::uint64_t base_seed = 1;
  int workers = 1;
  std::string out_dir;  // empty: no files written

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  Scenario make_scenario() const;
  MotionModel make_motion_model() const;
  TrackerParams make_tracker_params(bool with_classifier) const;
  /// Tracker-side sensors: scenario sensors with the clutter mean floored to
  /// a small positive value so the likelihood ratio stays defined when the
  /// simulated clutter rate is zero.
  std::vector<SensorModel> make_tracker_sensors(const Scenario& scenario) const;

  static ExperimentConfig from_file(const std::string& path);
  /// Applies one `section.key = value` pair; throws on unknown keys.
  void apply(const std::string& key, const std::string& value);
};

struct RunResult {
  int run = 0;
  MetricReport proposed;
  MetricReport baseline;
};

struct ExperimentResult {
  std::vector<RunResult> runs;
  MetricReport proposed;  // per-metric: time average per run, then run average
  MetricReport baseline;  // series: per-step mean over runs
};

/// Runs the seeded Monte Carlo batch: per run, one frame set drives both the
/// classifier-aided tracker and the baseline (classifier factors replaced by
/// one) with identical seeds. Writes runs.csv and aggregate.csv when an
/// output directory is configured.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Writes the per-step MOSPA-T comparison (columns n, baseline, proposed).
ExperimentResult emit_mospa_t_series(const ExperimentConfig& config,
                                     const std::string& csv_path);

/// One fully logged run: per-step track estimates, measurement frames, and
/// metrics, written as CSV files into `out_dir`.
void run_single_dump(const ExperimentConfig& config, const std::string& out_dir);

}  // namespace spatrack
