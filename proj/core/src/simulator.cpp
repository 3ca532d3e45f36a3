#include "spatrack/simulator.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace spatrack {

namespace {

Eigen::Rotation2D<double> rotation(double angle) { return Eigen::Rotation2D<double>(angle); }

}  // namespace

bool Scenario::alive(int target, int n) const {
  const auto& t = targets.at(target);
  return n >= t.birth_step && n <= t.death_step;
}

Vec2 Scenario::position(int target, int n) const {
  const auto& t = targets.at(target);
  const double step_length = speed * step_seconds;
  const Vec2 inbound = -t.start_position.normalized();
  if (n <= turn_onset_step) {
    return t.start_position + (step_length * n) * inbound;
  }
  const Vec2 turn_point = t.start_position + (step_length * turn_onset_step) * inbound;
  const Vec2 outbound = rotation(turn_angle) * inbound;
  return turn_point + (step_length * (n - turn_onset_step)) * outbound;
}

Vec2 Scenario::velocity(int target, int n) const {
  const auto& t = targets.at(target);
  const Vec2 inbound = -t.start_position.normalized();
  const Vec2 heading = n < turn_onset_step ? inbound : Vec2(rotation(turn_angle) * inbound);
  return speed * heading;
}

PointSet Scenario::truth_at(int n) const {
  PointSet out;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!alive(static_cast<int>(i), n)) continue;
    out.push_back({position(static_cast<int>(i), n), static_cast<int>(i)});
  }
  return out;
}

PointSequence Scenario::truth_sequence() const {
  PointSequence seq;
  seq.reserve(num_steps);
  for (int n = 1; n <= num_steps; ++n) seq.push_back(truth_at(n));
  return seq;
}

std::pair<ConfusionMatrix, ClutterClassPmf> build_supplementary_confusions(
    int num_classes, ConfusionRegime regime) {
  if (num_classes < 1) {
    throw std::invalid_argument("build_supplementary_confusions: C must be >= 1");
  }
  double diagonal = 0.0;
  double off_diagonal = 0.0;
  switch (regime) {
    case ConfusionRegime::kFixedDiagonal:
      diagonal = 0.85;
      off_diagonal = 0.15 / num_classes;
      break;
    case ConfusionRegime::kFixedOffDiagonal:
      diagonal = 1.0 - 0.10 * num_classes;
      off_diagonal = 0.10;
      if (diagonal <= 0.0) {
        throw std::invalid_argument(
            "build_supplementary_confusions: fixed off-diagonal regime needs 0.10 C < 1");
      }
      break;
  }
  Eigen::MatrixXd g = Eigen::MatrixXd::Constant(num_classes + 1, num_classes, off_diagonal);
  for (int j = 0; j < num_classes; ++j) g(j + 1, j) = diagonal;
  // Verdict 0 means "clutter": the clutter pmf concentrates there with the
  // same diagonal weight and spreads the rest evenly over the classes.
  Eigen::VectorXd p0 = Eigen::VectorXd::Constant(num_classes + 1, off_diagonal);
  p0[0] = diagonal;
  return {ConfusionMatrix(std::move(g)), ClutterClassPmf(std::move(p0))};
}

Scenario build_paper_scenario(const ScenarioOptions& options) {
  const int c = options.num_classes;
  const int s = options.num_sensors;
  if (c != 1 && c != 2 && c != 3 && c != 6) {
    throw std::invalid_argument("build_paper_scenario: supported class counts are 1, 2, 3, 6");
  }
  if (s != 1 && s != 2) {
    throw std::invalid_argument("build_paper_scenario: supported sensor counts are 1 and 2");
  }

  Scenario scenario;
  scenario.roi = options.roi;
  scenario.step_seconds = options.step_seconds;
  scenario.speed = options.speed;
  scenario.turn_angle = deg_to_rad(options.turn_angle_deg);
  scenario.num_classes = c;
  scenario.num_steps = options.variant == ScenarioVariant::kLetter ? 140 : 150;
  scenario.class_transitions =
      ClassTransitionMatrix::uniform_diagonal(c, options.class_stay_prob);

  const int late_death = options.variant == ScenarioVariant::kLetter ? 130 : 150;
  const int early_death = options.variant == ScenarioVariant::kLetter ? 120 : 140;
  constexpr int kTargetCount = 6;
  for (int i = 0; i < kTargetCount; ++i) {
    TargetSpec t;
    t.name = std::string(1, static_cast<char>('A' + i));
    const double angle = 2.0 * std::numbers::pi * i / kTargetCount;
    t.start_position = options.spawn_radius * Vec2(std::cos(angle), std::sin(angle));
    // A, C, E appear late and live long; B, D, F appear at the start.
    const bool late_birth = i % 2 == 0;
    t.birth_step = late_birth ? 10 : 1;
    t.death_step = late_birth ? late_death : early_death;
    t.class_label = i % c + 1;
    scenario.targets.push_back(std::move(t));
  }

  if (options.turn_onset_step >= 0) {
    scenario.turn_onset_step = options.turn_onset_step;
  } else {
    // First step within one step length of the center.
    const double step_length = options.speed * options.step_seconds;
    scenario.turn_onset_step =
        static_cast<int>(std::ceil((options.spawn_radius - step_length) / step_length));
  }

  auto [confusion, clutter_pmf] = build_supplementary_confusions(c, options.regime);
  for (int i = 0; i < s; ++i) {
    SensorModel sensor{.position = Vec2::Zero(),
                       .sigma_range = options.sigma_range,
                       .sigma_bearing = deg_to_rad(options.sigma_bearing_deg),
                       .detection_prob = options.detection_prob,
                       .clutter_mean = options.clutter_mean,
                       .roi = options.roi,
                       .confusion = confusion,
                       .clutter_class_pmf = clutter_pmf};
    const double angle = 2.0 * std::numbers::pi * i / s;
    sensor.position = options.sensor_radius * Vec2(std::cos(angle), std::sin(angle));
    sensor.validate();
    scenario.sensors.push_back(std::move(sensor));
  }
  return scenario;
}

MeasurementFrame generate_frame(const Scenario& scenario, int n, int sensor_index,
                                RandomStream& rng) {
  if (n < 1 || n > scenario.num_steps) {
    throw std::out_of_range("generate_frame: step index out of range");
  }
  const SensorModel& sensor = scenario.sensors.at(sensor_index);

  MeasurementFrame frame;
  frame.time = n;
  frame.sensor = sensor_index;

  std::vector<std::pair<AugmentedMeasurement, int>> entries;
  for (std::size_t i = 0; i < scenario.targets.size(); ++i) {
    if (!scenario.alive(static_cast<int>(i), n)) continue;
    if (!rng.bernoulli(sensor.detection_prob)) continue;
    const Vec2 d = scenario.position(static_cast<int>(i), n) - sensor.position;
    AugmentedMeasurement z;
    z.range = std::max(0.0, d.norm() + sensor.sigma_range * rng.normal());
    z.bearing = wrap_angle(std::atan2(d.y(), d.x()) + sensor.sigma_bearing * rng.normal());
    z.class_estimate =
        rng.categorical(sensor.confusion.column(scenario.targets[i].class_label));
    entries.emplace_back(z, static_cast<int>(i));
  }

  const int clutter_count = rng.poisson(sensor.clutter_mean);
  for (int i = 0; i < clutter_count; ++i) {
    // Uniform position in the ROI, expressed in (range, bearing): exactly the
    // clutter density that grows linearly with range.
    const Vec2 p(rng.uniform(scenario.roi.x_min, scenario.roi.x_max),
                 rng.uniform(scenario.roi.y_min, scenario.roi.y_max));
    const Vec2 d = p - sensor.position;
    AugmentedMeasurement z;
    z.range = d.norm();
    z.bearing = std::atan2(d.y(), d.x());
    z.class_estimate = rng.categorical(sensor.clutter_class_pmf.vector());
    entries.emplace_back(z, -1);
  }

  rng.shuffle(entries);
  frame.measurements.reserve(entries.size());
  frame.origins.reserve(entries.size());
  for (auto& [z, origin] : entries) {
    frame.measurements.push_back(z);
    frame.origins.push_back(origin);
  }
  return frame;
}

}  // namespace spatrack
