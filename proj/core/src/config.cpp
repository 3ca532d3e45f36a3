#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "spatrack/experiment.hpp"

namespace spatrack {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": expected a number, got '" + value + "'");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": expected an integer, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::invalid_argument(key + ": expected true/false, got '" + value + "'");
}

}  // namespace

void ExperimentConfig::apply(const std::string& key, const std::string& value) {
  if (key == "scenario.classes") num_classes = parse_int(key, value);
  else if (key == "scenario.sensors") num_sensors = parse_int(key, value);
  else if (key == "scenario.mu") clutter_mean = parse_double(key, value);
  else if (key == "scenario.regime") {
    if (value == "fixed_diag") regime = ConfusionRegime::kFixedDiagonal;
    else if (value == "fixed_offdiag") regime = ConfusionRegime::kFixedOffDiagonal;
    else throw std::invalid_argument(key + ": expected fixed_diag or fixed_offdiag");
  } else if (key == "scenario.variant") {
    if (value == "letter") variant = ScenarioVariant::kLetter;
    else if (value == "extended") variant = ScenarioVariant::kExtended;
    else throw std::invalid_argument(key + ": expected letter or extended");
  } else if (key == "scenario.roi_x_min_m") roi.x_min = parse_double(key, value);
  else if (key == "scenario.roi_x_max_m") roi.x_max = parse_double(key, value);
  else if (key == "scenario.roi_y_min_m") roi.y_min = parse_double(key, value);
  else if (key == "scenario.roi_y_max_m") roi.y_max = parse_double(key, value);
  else if (key == "scenario.spawn_radius_m") spawn_radius_m = parse_double(key, value);
  else if (key == "scenario.sensor_radius_m") sensor_radius_m = parse_double(key, value);
  else if (key == "scenario.speed_mps") speed_mps = parse_double(key, value);
  else if (key == "scenario.step_seconds") step_seconds = parse_double(key, value);
  else if (key == "scenario.turn_angle_deg") turn_angle_deg = parse_double(key, value);
  else if (key == "scenario.turn_onset_step") turn_onset_step = parse_int(key, value);
  else if (key == "scenario.class_stay_prob") class_stay_prob = parse_double(key, value);
  else if (key == "sensor.sigma_range_m") sigma_range_m = parse_double(key, value);
  else if (key == "sensor.sigma_bearing_deg") sigma_bearing_deg = parse_double(key, value);
  else if (key == "sensor.detection_prob") detection_prob = parse_double(key, value);
  else if (key == "tracker.num_pts") num_pts = parse_int(key, value);
  else if (key == "tracker.particles") particles = parse_int(key, value);
  else if (key == "tracker.birth_particles") birth_particles = parse_int(key, value);
  else if (key == "tracker.bp_iterations") bp_iterations = parse_int(key, value);
  else if (key == "tracker.bp_tolerance") bp_tolerance = parse_double(key, value);
  else if (key == "tracker.detection_threshold") detection_threshold = parse_double(key, value);
  else if (key == "tracker.survival_prob") survival_prob = parse_double(key, value);
  else if (key == "tracker.birth_prob") birth_prob = parse_double(key, value);
  else if (key == "tracker.accel_std_mps2") accel_std_mps2 = parse_double(key, value);
  else if (key == "tracker.birth_velocity_std_mps") birth_velocity_std_mps = parse_double(key, value);
  else if (key == "tracker.classifier_enabled") classifier_enabled = parse_bool(key, value);
  else if (key == "tracker.run_baseline") run_baseline = parse_bool(key, value);
  else if (key == "run.num_runs") num_runs = parse_int(key, value);
  else if (key == "run.base_seed") base_seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "run.workers") workers = parse_int(key, value);
  else if (key == "run.out_dir") out_dir = value;
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  ExperimentConfig config;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path + ":" + std::to_string(line_number) +
                                  ": expected 'key = value'");
    }
    try {
      config.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(path + ":" + std::to_string(line_number) + ": " + e.what());
    }
  }
  return config;
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const char* message) {
    if (!ok) throw std::invalid_argument(message);
  };
  require(num_classes == 1 || num_classes == 2 || num_classes == 3 || num_classes == 6,
          "scenario.classes must be one of 1, 2, 3, 6");
  require(num_sensors == 1 || num_sensors == 2, "scenario.sensors must be 1 or 2");
  require(clutter_mean >= 0.0, "scenario.mu must be >= 0");
  require(roi.area() > 0.0, "scenario ROI must have positive area");
  require(sigma_range_m > 0.0, "sensor.sigma_range_m must be > 0");
  require(sigma_bearing_deg > 0.0, "sensor.sigma_bearing_deg must be > 0");
  require(detection_prob >= 0.0 && detection_prob <= 1.0,
          "sensor.detection_prob must be in [0, 1]");
  require(num_pts >= 1, "tracker.num_pts must be >= 1");
  require(num_pts >= 6, "tracker.num_pts must cover the six simultaneous targets");
  require(particles >= 1, "tracker.particles must be >= 1");
  require(birth_particles >= 0, "tracker.birth_particles must be >= 0");
  require(bp_iterations >= 1, "tracker.bp_iterations must be >= 1");
  require(bp_tolerance >= 0.0, "tracker.bp_tolerance must be >= 0");
  require(detection_threshold >= 0.0 && detection_threshold <= 1.0,
          "tracker.detection_threshold must be in [0, 1]");
  require(survival_prob >= 0.0 && survival_prob <= 1.0,
          "tracker.survival_prob must be in [0, 1]");
  require(birth_prob >= 0.0 && birth_prob <= 1.0, "tracker.birth_prob must be in [0, 1]");
  require(accel_std_mps2 >= 0.0, "tracker.accel_std_mps2 must be >= 0");
  require(birth_velocity_std_mps >= 0.0, "tracker.birth_velocity_std_mps must be >= 0");
  require(num_runs >= 1, "run.num_runs must be >= 1");
  require(workers >= 1, "run.workers must be >= 1");
}

Scenario ExperimentConfig::make_scenario() const {
  ScenarioOptions options;
  options.num_classes = num_classes;
  options.num_sensors = num_sensors;
  options.clutter_mean = clutter_mean;
  options.regime = regime;
  options.variant = variant;
  options.sigma_range = sigma_range_m;
  options.sigma_bearing_deg = sigma_bearing_deg;
  options.detection_prob = detection_prob;
  options.roi = roi;
  options.spawn_radius = spawn_radius_m;
  options.sensor_radius = sensor_radius_m;
  options.speed = speed_mps;
  options.step_seconds = step_seconds;
  options.turn_angle_deg = turn_angle_deg;
  options.turn_onset_step = turn_onset_step;
  options.class_stay_prob = class_stay_prob;
  return build_paper_scenario(options);
}

MotionModel ExperimentConfig::make_motion_model() const {
  MotionModel motion = MotionModel::nearly_constant_velocity(step_seconds, accel_std_mps2);
  motion.survival_prob = survival_prob;
  motion.birth_prob = birth_prob;
  motion.birth_region = roi;
  motion.birth_velocity_std = birth_velocity_std_mps;
  return motion;
}

TrackerParams ExperimentConfig::make_tracker_params(bool with_classifier) const {
  TrackerParams params;
  params.num_targets = num_pts;
  params.num_particles = particles;
  params.birth_particles = birth_particles;
  params.bp_max_iterations = bp_iterations;
  params.bp_tolerance = bp_tolerance;
  params.detection_threshold = detection_threshold;
  params.classifier_enabled = with_classifier;
  return params;
}

std::vector<SensorModel> ExperimentConfig::make_tracker_sensors(const Scenario& scenario) const {
  std::vector<SensorModel> sensors = scenario.sensors;
  for (auto& s : sensors) {
    s.clutter_mean = std::max(s.clutter_mean, 1e-3);
  }
  return sensors;
}

}  // namespace spatrack
