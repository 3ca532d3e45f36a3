#include "spatrack/experiment.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "spatrack/estimator.hpp"

namespace spatrack {

namespace {

constexpr std::uint64_t kFrameStreamTag = 0xF0A1;
constexpr std::uint64_t kTrackerStreamTag = 0x77C4;

struct RunInputs {
  const ExperimentConfig* config;
  const Scenario* scenario;
  std::vector<SensorModel> tracker_sensors;
  MotionModel motion;
};

PointSequence run_tracker(const RunInputs& inputs,
                          const std::vector<std::vector<std::vector<AugmentedMeasurement>>>& frames,
                          bool with_classifier, std::uint64_t seed) {
  const auto& config = *inputs.config;
  Tracker tracker(config.make_tracker_params(with_classifier), inputs.motion,
                  inputs.scenario->class_transitions, inputs.tracker_sensors, seed);
  PointSequence estimates;
  estimates.reserve(frames.size());
  for (std::size_t n = 0; n < frames.size(); ++n) {
    tracker.advance(frames[n]);
    PointSet step_points;
    for (const auto& est :
         detect_and_estimate(tracker.beliefs(), config.detection_threshold,
                             static_cast<int>(n) + 1)) {
      step_points.push_back({est.position, est.label});
    }
    estimates.push_back(std::move(step_points));
  }
  return estimates;
}

RunResult execute_run(const RunInputs& inputs, int run_index) {
  const auto& config = *inputs.config;
  const auto& scenario = *inputs.scenario;

  // One frame set per run feeds both trackers.
  RandomStream frame_rng(stream_seed(config.base_seed, run_index, kFrameStreamTag));
  std::vector<std::vector<std::vector<AugmentedMeasurement>>> frames(scenario.num_steps);
  for (int n = 1; n <= scenario.num_steps; ++n) {
    auto& per_sensor = frames[n - 1];
    per_sensor.resize(scenario.sensors.size());
    for (std::size_t s = 0; s < scenario.sensors.size(); ++s) {
      per_sensor[s] =
          generate_frame(scenario, n, static_cast<int>(s), frame_rng).measurements;
    }
  }

  const PointSequence truth = scenario.truth_sequence();
  const double area = scenario.roi.area_km2();
  const double duration = scenario.duration_seconds();
  const std::uint64_t tracker_seed =
      stream_seed(config.base_seed, run_index, kTrackerStreamTag);

  RunResult result;
  result.run = run_index;
  const PointSequence proposed =
      run_tracker(inputs, frames, config.classifier_enabled, tracker_seed);
  result.proposed = score_tracks(truth, proposed, area, duration);
  if (config.run_baseline) {
    const PointSequence baseline = run_tracker(inputs, frames, false, tracker_seed);
    result.baseline = score_tracks(truth, baseline, area, duration);
  }
  return result;
}

MetricReport aggregate(const std::vector<RunResult>& runs, bool baseline, int num_steps) {
  MetricReport total;
  total.gospa_series = Eigen::VectorXd::Zero(num_steps);
  total.ospa_series = Eigen::VectorXd::Zero(num_steps);
  total.ospa_t_series = Eigen::VectorXd::Zero(num_steps);
  int counted = 0;
  for (const auto& run : runs) {
    const MetricReport& r = baseline ? run.baseline : run.proposed;
    if (r.gospa_series.size() != num_steps) continue;  // tracker was not run
    ++counted;
    total.mgospa += r.mgospa;
    total.mospa += r.mospa;
    total.mospa_t += r.mospa_t;
    total.far += r.far;
    total.gospa_series += r.gospa_series;
    total.ospa_series += r.ospa_series;
    total.ospa_t_series += r.ospa_t_series;
  }
  if (counted == 0) return total;
  const double n = static_cast<double>(counted);
  total.mgospa /= n;
  total.mospa /= n;
  total.mospa_t /= n;
  total.far /= n;
  total.gospa_series /= n;
  total.ospa_series /= n;
  total.ospa_t_series /= n;
  return total;
}

void write_run_csv(const ExperimentConfig& config, const std::vector<RunResult>& runs,
                   const MetricReport& proposed, const MetricReport& baseline) {
  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);

  std::ofstream runs_csv(fs::path(config.out_dir) / "runs.csv");
  runs_csv << "# schema: spatrack-runs-v1\n"
           << "run,tracker,mgospa_m,mospa_m,mospa_t_m,far_per_km2_s\n";
  auto row = [&runs_csv](int run, const char* name, const MetricReport& r) {
    runs_csv << run << ',' << name << ',' << r.mgospa << ',' << r.mospa << ',' << r.mospa_t
             << ',' << r.far << '\n';
  };
  for (const auto& run : runs) {
    row(run.run, "proposed", run.proposed);
    if (config.run_baseline) row(run.run, "baseline", run.baseline);
  }

  std::ofstream agg_csv(fs::path(config.out_dir) / "aggregate.csv");
  agg_csv << "# schema: spatrack-aggregate-v1\n"
          << "tracker,runs,mgospa_m,mospa_m,mospa_t_m,far_per_km2_s\n";
  agg_csv << "proposed," << runs.size() << ',' << proposed.mgospa << ',' << proposed.mospa
          << ',' << proposed.mospa_t << ',' << proposed.far << '\n';
  if (config.run_baseline) {
    agg_csv << "baseline," << runs.size() << ',' << baseline.mgospa << ',' << baseline.mospa
            << ',' << baseline.mospa_t << ',' << baseline.far << '\n';
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Scenario scenario = config.make_scenario();

  RunInputs inputs{&config, &scenario, config.make_tracker_sensors(scenario),
                   config.make_motion_model()};
  inputs.motion.validate();

  ExperimentResult result;
  result.runs.resize(config.num_runs);

  const int worker_count = std::min(config.workers, config.num_runs);
  if (worker_count <= 1) {
    for (int i = 0; i < config.num_runs; ++i) result.runs[i] = execute_run(inputs, i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(worker_count);
    for (int w = 0; w < worker_count; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int i = next.fetch_add(1); i < config.num_runs; i = next.fetch_add(1)) {
            result.runs[i] = execute_run(inputs, i);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  result.proposed = aggregate(result.runs, false, scenario.num_steps);
  result.baseline = aggregate(result.runs, true, scenario.num_steps);
  if (!config.out_dir.empty()) {
    write_run_csv(config, result.runs, result.proposed, result.baseline);
  }
  return result;
}

ExperimentResult emit_mospa_t_series(const ExperimentConfig& config,
                                     const std::string& csv_path) {
  ExperimentConfig with_baseline = config;
  with_baseline.run_baseline = true;
  const ExperimentResult result = run_experiment(with_baseline);

  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot write series CSV '" + csv_path + "'");
  csv << "# schema: spatrack-mospa-t-series-v1\n"
      << "n,baseline_mospa_t_m,proposed_mospa_t_m\n";
  for (int n = 0; n < result.proposed.ospa_t_series.size(); ++n) {
    csv << (n + 1) << ',' << result.baseline.ospa_t_series[n] << ','
        << result.proposed.ospa_t_series[n] << '\n';
  }
  return result;
}

void run_single_dump(const ExperimentConfig& config, const std::string& out_dir) {
  config.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const Scenario scenario = config.make_scenario();
  RunInputs inputs{&config, &scenario, config.make_tracker_sensors(scenario),
                   config.make_motion_model()};

  RandomStream frame_rng(stream_seed(config.base_seed, 0, kFrameStreamTag));
  std::ofstream frames_csv(fs::path(out_dir) / "frames.csv");
  frames_csv << "# schema: spatrack-frames-v1\n"
             << "run,n,s,range_m,bearing_rad,zeta,origin\n";
  std::vector<std::vector<std::vector<AugmentedMeasurement>>> frames(scenario.num_steps);
  for (int n = 1; n <= scenario.num_steps; ++n) {
    frames[n - 1].resize(scenario.sensors.size());
    for (std::size_t s = 0; s < scenario.sensors.size(); ++s) {
      const MeasurementFrame frame = generate_frame(scenario, n, static_cast<int>(s), frame_rng);
      frames[n - 1][s] = frame.measurements;
      for (std::size_t m = 0; m < frame.measurements.size(); ++m) {
        const auto& z = frame.measurements[m];
        frames_csv << 0 << ',' << n << ',' << s << ',' << z.range << ',' << z.bearing << ','
                   << z.class_estimate << ',';
        if (frame.origins[m] < 0) {
          frames_csv << "clutter";
        } else {
          frames_csv << scenario.targets[frame.origins[m]].name;
        }
        frames_csv << '\n';
      }
    }
  }

  const std::uint64_t tracker_seed = stream_seed(config.base_seed, 0, kTrackerStreamTag);
  std::ofstream tracks_csv(fs::path(out_dir) / "tracks.csv");
  tracks_csv << "# schema: spatrack-tracks-v1\n"
             << "run,tracker,n,pt,x_m,y_m,vx_mps,vy_mps,existence_prob,map_class\n";

  auto run_and_dump = [&](bool with_classifier, const char* name) {
    Tracker tracker(config.make_tracker_params(with_classifier), inputs.motion,
                    scenario.class_transitions, inputs.tracker_sensors, tracker_seed);
    PointSequence estimates;
    for (int n = 1; n <= scenario.num_steps; ++n) {
      tracker.advance(frames[n - 1]);
      PointSet step_points;
      for (const auto& est :
           detect_and_estimate(tracker.beliefs(), config.detection_threshold, n)) {
        int map_class = 0;
        est.class_pmf.maxCoeff(&map_class);
        tracks_csv << 0 << ',' << name << ',' << n << ',' << est.pt_index << ','
                   << est.position.x() << ',' << est.position.y() << ',' << est.velocity.x()
                   << ',' << est.velocity.y() << ',' << est.existence_prob << ','
                   << (map_class + 1) << '\n';
        step_points.push_back({est.position, est.label});
      }
      estimates.push_back(std::move(step_points));
    }
    return estimates;
  };

  const PointSequence truth = scenario.truth_sequence();
  const PointSequence proposed = run_and_dump(config.classifier_enabled, "proposed");
  const MetricReport proposed_report =
      score_tracks(truth, proposed, scenario.roi.area_km2(), scenario.duration_seconds());

  std::ofstream metrics_csv(fs::path(out_dir) / "metrics.csv");
  metrics_csv << "# schema: spatrack-aggregate-v1\n"
              << "tracker,runs,mgospa_m,mospa_m,mospa_t_m,far_per_km2_s\n";
  metrics_csv << "proposed,1," << proposed_report.mgospa << ',' << proposed_report.mospa << ','
              << proposed_report.mospa_t << ',' << proposed_report.far << '\n';
  if (config.run_baseline) {
    const PointSequence baseline = run_and_dump(false, "baseline");
    const MetricReport baseline_report =
        score_tracks(truth, baseline, scenario.roi.area_km2(), scenario.duration_seconds());
    metrics_csv << "baseline,1," << baseline_report.mgospa << ',' << baseline_report.mospa
                << ',' << baseline_report.mospa_t << ',' << baseline_report.far << '\n';
  }
}

}  // namespace spatrack
