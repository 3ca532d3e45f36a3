#include <doctest.h>

#include <cmath>

#include "spatrack/engine.hpp"
#include "spatrack/simulator.hpp"

using namespace spatrack;

namespace {

MotionModel test_motion(double accel_std = 0.1, double p_s = 0.999, double p_b = 0.01) {
  MotionModel m = MotionModel::nearly_constant_velocity(2.0, accel_std);
  m.survival_prob = p_s;
  m.birth_prob = p_b;
  m.birth_region = Rect{-200.0, 200.0, -150.0, 150.0};
  m.birth_velocity_std = 1.0;
  return m;
}

SensorModel test_sensor(int num_classes = 3, double mu = 20.0) {
  auto [confusion, clutter] =
      build_supplementary_confusions(num_classes, ConfusionRegime::kFixedDiagonal);
  return SensorModel{.position = Vec2(3000.0, 0.0),
                     .sigma_range = 5.0,
                     .sigma_bearing = deg_to_rad(0.1),
                     .detection_prob = 0.9,
                     .clutter_mean = mu,
                     .roi = Rect{-200.0, 200.0, -150.0, 150.0},
                     .confusion = std::move(confusion),
                     .clutter_class_pmf = std::move(clutter)};
}

AugmentedBelief uniform_belief(int j, int c, double existence, RandomStream& rng) {
  AugmentedBelief b;
  b.particles.resize(4, j);
  for (int i = 0; i < j; ++i) {
    b.particles.col(i) << rng.uniform(-150, 150), rng.uniform(-100, 100), rng.normal(),
        rng.normal();
  }
  b.class_weights = Eigen::MatrixXd::Constant(j, c, existence / (j * c));
  b.nonexistence_mass = 1.0 - b.class_weights.sum();
  return b;
}

// Ratio table with unit scale and constant per-measurement ratios.
LikelihoodTable constant_table(int j, int c, const std::vector<double>& ratios) {
  LikelihoodTable table;
  const int m = static_cast<int>(ratios.size());
  table.kinematic.resize(j, m);
  for (int i = 0; i < m; ++i) table.kinematic.col(i).setConstant(ratios[i]);
  table.classifier = Eigen::MatrixXd::Ones(m, c);
  table.log_scale = 0.0;
  return table;
}

}  // namespace

TEST_CASE("predict: identity dynamics move particles deterministically") {
  RandomStream rng(1);
  AugmentedBelief prev = uniform_belief(50, 3, 0.8, rng);
  const MotionModel motion = test_motion(0.0, 1.0, 0.0);
  const ClassTransitionMatrix identity{Eigen::MatrixXd::Identity(3, 3)};

  const Eigen::VectorXd before = prev.class_masses();
  const PredictedMessage pred = predict(prev, motion, identity, 10, rng);

  pred.validate();
  CHECK(pred.num_particles() == 60);
  // class marginals preserved (birth weights are zero with p_b = 0)
  const Eigen::VectorXd after = pred.class_masses();
  for (int c = 0; c < 3; ++c) CHECK(after[c] == doctest::Approx(before[c]).epsilon(1e-12));
  for (int j = 0; j < 50; ++j) {
    const Vec4 expected = motion.transition * prev.particles.col(j);
    CHECK((pred.particles.col(j) - expected).norm() == doctest::Approx(0.0));
  }
  CHECK(pred.nonexistence_mass == doctest::Approx(prev.nonexistence_mass).epsilon(1e-12));
}

TEST_CASE("predict: rebirth from a nonexistent target") {
  RandomStream rng(2);
  AugmentedBelief prev = AugmentedBelief::nonexistent(40, 3);
  const MotionModel motion = test_motion(0.1, 0.999, 0.01);
  const auto transitions = ClassTransitionMatrix::uniform_diagonal(3, 0.95);

  const PredictedMessage pred = predict(prev, motion, transitions, 20, rng);
  pred.validate();
  CHECK(pred.existence_mass() == doctest::Approx(0.01).epsilon(1e-12));
  const Eigen::VectorXd masses = pred.class_masses();
  for (int c = 0; c < 3; ++c) CHECK(masses[c] == doctest::Approx(0.01 / 3.0).epsilon(1e-12));
  CHECK(pred.nonexistence_mass == doctest::Approx(0.99).epsilon(1e-12));
  // birth particles land inside the birth region
  for (int j = 40; j < 60; ++j) {
    CHECK(motion.birth_region.contains(pred.particles.col(j).head<2>()));
  }
}

TEST_CASE("predict: uniform class weights stay uniform under a symmetric D") {
  RandomStream rng(3);
  AugmentedBelief prev = uniform_belief(30, 3, 0.6, rng);
  const auto transitions = ClassTransitionMatrix::uniform_diagonal(3, 0.95);
  const PredictedMessage pred = predict(prev, test_motion(), transitions, 0, rng);
  const Eigen::VectorXd masses = pred.class_masses();
  CHECK(std::abs(masses[0] - masses[1]) < 1e-12);
  CHECK(std::abs(masses[1] - masses[2]) < 1e-12);
}

TEST_CASE("predict: mass conservation across branches") {
  RandomStream rng(4);
  AugmentedBelief prev = uniform_belief(25, 2, 0.37, rng);
  const MotionModel motion = test_motion(0.0, 0.9, 0.2);
  const auto transitions = ClassTransitionMatrix::uniform_diagonal(2, 0.8);
  const PredictedMessage pred = predict(prev, motion, transitions, 5, rng);
  // survival + birth existence and death + stay nonexistence
  const double expected_existence = 0.9 * 0.37 + 0.2 * 0.63;
  CHECK(pred.existence_mass() == doctest::Approx(expected_existence).epsilon(1e-12));
  CHECK(pred.existence_mass() + pred.nonexistence_mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("predict rejects an all-zero belief") {
  RandomStream rng(5);
  AugmentedBelief broken = AugmentedBelief::nonexistent(10, 2);
  broken.nonexistence_mass = 0.0;
  CHECK_THROWS_AS(predict(broken, test_motion(), ClassTransitionMatrix::uniform_diagonal(2, 0.9),
                          0, rng),
                  std::invalid_argument);
}

TEST_CASE("measurement evaluation") {
  const SensorModel sensor = test_sensor();

  SUBCASE("fully nonexistent target ignores all measurements") {
    AugmentedBelief pred = AugmentedBelief::nonexistent(10, 3);
    const LikelihoodTable table = constant_table(10, 3, {2.0, 5.0});
    const Eigen::VectorXd beta = measurement_evaluation(pred, table, sensor);
    CHECK(beta[0] == doctest::Approx(1.0));
    CHECK(beta[1] == doctest::Approx(0.0));
    CHECK(beta[2] == doctest::Approx(0.0));
  }
  SUBCASE("single particle with unit weight") {
    AugmentedBelief pred;
    pred.particles = Eigen::Matrix4Xd::Zero(4, 1);
    pred.class_weights = Eigen::MatrixXd::Zero(1, 3);
    pred.class_weights(0, 1) = 1.0;
    pred.nonexistence_mass = 0.0;
    const double ratio = 3.7;
    const LikelihoodTable table = constant_table(1, 3, {ratio});
    const Eigen::VectorXd beta = measurement_evaluation(pred, table, sensor);
    CHECK(beta[0] == doctest::Approx(0.1));
    CHECK(beta[1] == doctest::Approx(0.9 * ratio));
  }
  SUBCASE("no measurements") {
    RandomStream rng(6);
    AugmentedBelief pred = uniform_belief(10, 3, 0.5, rng);
    const Eigen::VectorXd beta =
        measurement_evaluation(pred, constant_table(10, 3, {}), sensor);
    CHECK(beta.size() == 1);
    CHECK(beta[0] == doctest::Approx(0.5 * 0.1 + 0.5));
  }
}

TEST_CASE("measurement update") {
  const SensorModel sensor = test_sensor();
  RandomStream rng(7);
  AugmentedBelief pred = uniform_belief(8, 3, 0.6, rng);

  SUBCASE("all measurements ruled out") {
    const LikelihoodTable table = constant_table(8, 3, {4.0, 2.0});
    Eigen::VectorXd eta(3);
    eta << 1.0, 0.0, 0.0;
    const SensorFactor factor = measurement_update(pred, table, eta, sensor);
    CHECK(factor.nonexistence_scalar == doctest::Approx(1.0));
    CHECK(factor.gamma.minCoeff() == doctest::Approx(0.1));
    CHECK(factor.gamma.maxCoeff() == doctest::Approx(0.1));
  }
  SUBCASE("uniform eta with unit ratio") {
    const LikelihoodTable table = constant_table(8, 3, {1.0});
    Eigen::VectorXd eta(2);
    eta << 0.5, 0.5;
    const SensorFactor factor = measurement_update(pred, table, eta, sensor);
    CHECK(factor.gamma(0, 0) == doctest::Approx(0.1 * 0.5 + 0.9 * 0.5));
  }
  SUBCASE("eta[0] = 0 kills the nonexistence branch") {
    const LikelihoodTable table = constant_table(8, 3, {1.0});
    Eigen::VectorXd eta(2);
    eta << 0.0, 1.0;
    const SensorFactor factor = measurement_update(pred, table, eta, sensor);
    CHECK(factor.nonexistence_scalar == doctest::Approx(0.0));
  }
  SUBCASE("mismatched eta length throws") {
    const LikelihoodTable table = constant_table(8, 3, {1.0});
    CHECK_THROWS_AS(measurement_update(pred, table, Eigen::VectorXd::Ones(3), sensor),
                    std::invalid_argument);
  }
}

TEST_CASE("fuse and normalize") {
  RandomStream rng(8);

  SUBCASE("unit factors preserve the prediction") {
    AugmentedBelief pred = uniform_belief(2000, 3, 0.55, rng);
    SensorFactor unit{Eigen::MatrixXd::Ones(2000, 3), 1.0};
    const AugmentedBelief fused = fuse_and_normalize(pred, {unit}, 2000, rng);
    fused.validate();
    CHECK(fused.existence_mass() == doctest::Approx(0.55).epsilon(1e-9));
    const Eigen::VectorXd masses = fused.class_masses();
    for (int c = 0; c < 3; ++c) {
      // class marginals survive up to resampling noise
      CHECK(masses[c] == doctest::Approx(0.55 / 3.0).epsilon(0.05));
    }
  }
  SUBCASE("two identical constant factors double the log-odds shift") {
    AugmentedBelief pred = uniform_belief(100, 2, 0.5, rng);
    SensorFactor factor{Eigen::MatrixXd::Constant(100, 2, 2.0), 0.5};
    const AugmentedBelief once = fuse_and_normalize(pred, {factor}, 100, rng);
    const AugmentedBelief twice = fuse_and_normalize(pred, {factor, factor}, 100, rng);
    const auto odds = [](const AugmentedBelief& b) {
      return b.existence_mass() / b.nonexistence_mass;
    };
    const double prior_odds = pred.existence_mass() / pred.nonexistence_mass;
    const double shift_once = std::log(odds(once) / prior_odds);
    const double shift_twice = std::log(odds(twice) / prior_odds);
    CHECK(shift_twice == doctest::Approx(2.0 * shift_once).epsilon(1e-9));
  }
  SUBCASE("a factor concentrated on class 1 raises its marginal") {
    AugmentedBelief pred = uniform_belief(500, 3, 0.6, rng);
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Constant(500, 3, 0.2);
    gamma.col(0).setConstant(3.0);
    const AugmentedBelief fused = fuse_and_normalize(pred, {{gamma, 1.0}}, 500, rng);
    const Eigen::VectorXd masses = fused.class_masses();
    CHECK(masses[0] / fused.existence_mass() > 0.6 / 3.0 / 0.6);
  }
  SUBCASE("zero evidence resets to nonexistence") {
    AugmentedBelief pred = uniform_belief(10, 2, 1.0, rng);
    pred.nonexistence_mass = 0.0;
    SensorFactor zero{Eigen::MatrixXd::Zero(10, 2), 0.0};
    const AugmentedBelief fused = fuse_and_normalize(pred, {zero}, 10, rng);
    CHECK(fused.nonexistence_mass == doctest::Approx(1.0));
    CHECK(fused.existence_mass() == doctest::Approx(0.0));
  }
  SUBCASE("at least one factor required") {
    AugmentedBelief pred = uniform_belief(10, 2, 0.5, rng);
    CHECK_THROWS_AS(fuse_and_normalize(pred, {}, 10, rng), std::invalid_argument);
  }
}

TEST_CASE("step: no measurements shrink existence by the missed detection") {
  const double p_s = 0.999;
  const double p_b = 0.01;
  const double prior_existence = 0.3;
  RandomStream rng(9);
  std::vector<AugmentedBelief> beliefs{uniform_belief(400, 3, prior_existence, rng)};
  const SensorModel sensor = test_sensor();
  TrackerParams params;
  params.num_targets = 1;
  params.num_particles = 400;
  params.birth_particles = 40;

  RandomStream step_rng(10);
  const auto out = step(beliefs, {{}}, {sensor}, test_motion(0.1, p_s, p_b),
                        ClassTransitionMatrix::uniform_diagonal(3, 0.95), params, step_rng);
  REQUIRE(out.size() == 1);
  out[0].validate();
  const double pred_existence = p_s * prior_existence + p_b * (1.0 - prior_existence);
  const double expected = pred_existence * (1.0 - sensor.detection_prob) /
                          (pred_existence * (1.0 - sensor.detection_prob) +
                           (1.0 - pred_existence));
  CHECK(out[0].existence_mass() == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("step: per-sensor pipelines are deterministic") {
  RandomStream rng(11);
  AugmentedBelief pred = uniform_belief(64, 3, 0.5, rng);
  const SensorModel sensor = test_sensor();
  std::vector<AugmentedMeasurement> frame{{2950.0, 3.11, 1}, {3050.0, 3.13, 0}};

  const LikelihoodTable t1 = build_likelihood_table(pred, frame, sensor, true, true);
  const LikelihoodTable t2 = build_likelihood_table(pred, frame, sensor, true, true);
  CHECK((t1.kinematic.array() == t2.kinematic.array()).all());
  CHECK((t1.classifier.array() == t2.classifier.array()).all());
  const Eigen::VectorXd b1 = measurement_evaluation(pred, t1, sensor);
  const Eigen::VectorXd b2 = measurement_evaluation(pred, t2, sensor);
  CHECK((b1.array() == b2.array()).all());
}

TEST_CASE("scaled and exact likelihood tables agree up to the row scale") {
  RandomStream rng(12);
  AugmentedBelief pred = uniform_belief(64, 3, 0.7, rng);
  const SensorModel sensor = test_sensor();
  std::vector<AugmentedMeasurement> frame{{2950.0, 3.11, 1}, {3020.0, 3.16, 2}};

  const LikelihoodTable scaled = build_likelihood_table(pred, frame, sensor, true, true);
  const LikelihoodTable exact = build_likelihood_table(pred, frame, sensor, true, false);
  const Eigen::VectorXd beta_scaled = measurement_evaluation(pred, scaled, sensor);
  const Eigen::VectorXd beta_exact = measurement_evaluation(pred, exact, sensor);
  const double scale = std::exp(scaled.log_scale);
  for (int a = 0; a < beta_scaled.size(); ++a) {
    CHECK(beta_scaled[a] * scale == doctest::Approx(beta_exact[a]).epsilon(1e-9));
  }
  // scaled ratios never exceed one by construction
  double max_ratio = 0.0;
  for (int m = 0; m < scaled.num_measurements(); ++m) {
    for (int j = 0; j < 64; ++j) {
      for (int c = 1; c <= 3; ++c) {
        max_ratio = std::max(max_ratio, scaled.scaled_ratio(j, c, m));
      }
    }
  }
  CHECK(max_ratio <= 1.0 + 1e-9);
  CHECK(scaled.log_scale >= 0.0);
}

TEST_CASE("likelihood table rejects measurements outside the clutter support") {
  RandomStream rng(13);
  AugmentedBelief pred = uniform_belief(16, 3, 0.5, rng);
  const SensorModel sensor = test_sensor();
  std::vector<AugmentedMeasurement> frame{{500.0, 0.0, 1}};  // outside the ROI image
  CHECK_THROWS_WITH_AS(build_likelihood_table(pred, frame, sensor, true, true),
                       doctest::Contains("measurement 0"), std::runtime_error);
}

TEST_CASE("class permutation equivariance of the per-sensor pipeline") {
  const int c_count = 3;
  const std::vector<int> perm{2, 0, 1};  // new index of each old class
  RandomStream rng(14);

  for (int trial = 0; trial < 20; ++trial) {
    AugmentedBelief belief = uniform_belief(32, c_count, 0.6, rng);
    for (int j = 0; j < 32; ++j) {
      for (int c = 0; c < c_count; ++c) belief.class_weights(j, c) = rng.uniform();
    }
    const double total = belief.class_weights.sum() + 1.0;
    belief.class_weights /= total;
    belief.nonexistence_mass = 1.0 / total;

    AugmentedBelief permuted = belief;
    for (int c = 0; c < c_count; ++c) {
      permuted.class_weights.col(perm[c]) = belief.class_weights.col(c);
    }

    const SensorModel sensor = test_sensor();
    SensorModel sensor_perm = sensor;
    {
      Eigen::MatrixXd g = sensor.confusion.matrix();
      Eigen::MatrixXd gp(c_count + 1, c_count);
      Eigen::VectorXd p0 = sensor.clutter_class_pmf.vector();
      Eigen::VectorXd p0p(c_count + 1);
      p0p[0] = p0[0];
      for (int c = 0; c < c_count; ++c) {
        for (int r = 0; r < c_count; ++r) gp(perm[r] + 1, perm[c]) = g(r + 1, c);
        gp(0, perm[c]) = g(0, c);
        p0p[perm[c] + 1] = p0[c + 1];
      }
      sensor_perm.confusion = ConfusionMatrix(gp);
      sensor_perm.clutter_class_pmf = ClutterClassPmf(p0p);
    }

    std::vector<AugmentedMeasurement> frame{{2950.0, 3.11, 1}, {3040.0, 3.15, 0}};
    std::vector<AugmentedMeasurement> frame_perm = frame;
    for (auto& z : frame_perm) {
      if (z.class_estimate > 0) z.class_estimate = perm[z.class_estimate - 1] + 1;
    }

    const LikelihoodTable table = build_likelihood_table(belief, frame, sensor, true, true);
    const LikelihoodTable table_perm =
        build_likelihood_table(permuted, frame_perm, sensor_perm, true, true);

    const Eigen::VectorXd beta = measurement_evaluation(belief, table, sensor);
    const Eigen::VectorXd beta_perm = measurement_evaluation(permuted, table_perm, sensor_perm);
    for (int a = 0; a < beta.size(); ++a) {
      CHECK(beta[a] == doctest::Approx(beta_perm[a]).epsilon(1e-12));
    }

    Eigen::VectorXd eta(3);
    eta << 0.3, 0.4, 0.3;
    const SensorFactor factor = measurement_update(belief, table, eta, sensor);
    const SensorFactor factor_perm =
        measurement_update(permuted, table_perm, eta, sensor_perm);
    for (int j = 0; j < 32; ++j) {
      for (int c = 0; c < c_count; ++c) {
        CHECK(factor.gamma(j, c) ==
              doctest::Approx(factor_perm.gamma(j, perm[c])).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("belief mass stays normalized through repeated steps") {
  RandomStream rng(15);
  const SensorModel sensor = test_sensor(3, 5.0);
  TrackerParams params;
  params.num_targets = 3;
  params.num_particles = 200;
  params.birth_particles = 20;
  Tracker tracker(params, test_motion(), ClassTransitionMatrix::uniform_diagonal(3, 0.95),
                  {sensor}, 77);

  Scenario scenario = build_paper_scenario({.num_classes = 3, .num_sensors = 1,
                                            .clutter_mean = 5.0});
  RandomStream frame_rng(16);
  for (int n = 1; n <= 10; ++n) {
    const auto frame = generate_frame(scenario, n, 0, frame_rng);
    tracker.advance({frame.measurements});
    for (const auto& belief : tracker.beliefs()) belief.validate(1e-9);
  }
}
