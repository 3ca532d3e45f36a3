#include "spatrack/engine.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace spatrack {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

PredictedMessage predict(const AugmentedBelief& prev, const MotionModel& motion,
                         const ClassTransitionMatrix& transitions, int birth_particles,
                         RandomStream& rng) {
  const int j_prev = prev.num_particles();
  const int c = prev.num_classes();
  if (c != transitions.num_classes()) {
    throw std::invalid_argument("predict: class count mismatch with transition matrix");
  }
  const double existence = prev.existence_mass();
  const double nonexistence = prev.nonexistence_mass;
  if (!(existence + nonexistence > 0.0)) {
    throw std::invalid_argument("predict: degenerate all-zero belief");
  }

  const int j_out = j_prev + birth_particles;
  PredictedMessage out;
  out.particles.resize(4, j_out);
  out.class_weights.resize(j_out, c);

  // Survival branch: propagate particles, mix classes through D, scale by p_s.
  for (int j = 0; j < j_prev; ++j) {
    const Vec2 accel(rng.normal(), rng.normal());
    out.particles.col(j) = motion.transition * prev.particles.col(j) +
                           motion.noise_gain * (motion.accel_std * accel);
  }
  out.class_weights.topRows(j_prev) =
      motion.survival_prob * (prev.class_weights * transitions.matrix().transpose());

  // Birth branch: fresh particles, class-uniform share of the reborn mass.
  const double birth_mass = motion.birth_prob * nonexistence;
  const double birth_weight =
      birth_particles > 0 ? birth_mass / (static_cast<double>(c) * birth_particles) : 0.0;
  for (int j = 0; j < birth_particles; ++j) {
    const double x = rng.uniform(motion.birth_region.x_min, motion.birth_region.x_max);
    const double y = rng.uniform(motion.birth_region.y_min, motion.birth_region.y_max);
    out.particles.col(j_prev + j) << x, y, motion.birth_velocity_std * rng.normal(),
        motion.birth_velocity_std * rng.normal();
  }
  out.class_weights.bottomRows(birth_particles).setConstant(birth_weight);

  // Death and stay-nonexistent branches.
  out.nonexistence_mass =
      (1.0 - motion.survival_prob) * existence + (1.0 - motion.birth_prob) * nonexistence;
  if (birth_particles == 0) {
    // No particles available to carry the reborn mass; keep it nonexistent.
    out.nonexistence_mass += birth_mass;
  }

  const double total = out.class_weights.sum() + out.nonexistence_mass;
  out.class_weights /= total;
  out.nonexistence_mass /= total;
  return out;
}

LikelihoodTable build_likelihood_table(const PredictedMessage& pred,
                                       const std::vector<AugmentedMeasurement>& measurements,
                                       const SensorModel& sensor, bool classifier_enabled,
                                       bool subtract_max) {
  const int j_count = pred.num_particles();
  const int c_count = pred.num_classes();
  const int m_count = static_cast<int>(measurements.size());

  LikelihoodTable table;
  table.kinematic.resize(j_count, m_count);
  table.classifier.resize(m_count, c_count);
  table.log_scale = 0.0;
  if (m_count == 0) return table;

  // Predicted range/bearing per particle, shared across measurements.
  Eigen::ArrayXd pred_range(j_count), pred_bearing(j_count);
  for (int j = 0; j < j_count; ++j) {
    const Vec2 d = pred.particles.col(j).head<2>() - sensor.position;
    pred_range[j] = d.norm();
    pred_bearing[j] = std::atan2(d.y(), d.x());
  }

  const double log_norm =
      -std::log(2.0 * std::numbers::pi * sensor.sigma_range * sensor.sigma_bearing);
  Eigen::MatrixXd kin_log(j_count, m_count);
  Eigen::VectorXd kin_max(m_count);
  for (int m = 0; m < m_count; ++m) {
    const auto& z = measurements[m];
    const double clutter = clutter_density(z.range, z.bearing, sensor);
    if (clutter == 0.0) {
      throw std::runtime_error("likelihood table: measurement " + std::to_string(m) +
                               " lies outside the clutter support");
    }
    const double log_denom = std::log(sensor.clutter_mean * clutter);
    double col_max = kNegInf;
    for (int j = 0; j < j_count; ++j) {
      double ll = kNegInf;
      if (pred_range[j] > 0.0) {
        const double dr = (z.range - pred_range[j]) / sensor.sigma_range;
        const double db = wrap_angle(z.bearing - pred_bearing[j]) / sensor.sigma_bearing;
        ll = log_norm - 0.5 * (dr * dr + db * db);
      }
      const double v = ll - log_denom;
      kin_log(j, m) = v;
      col_max = std::max(col_max, v);
    }
    kin_max[m] = std::isfinite(col_max) ? col_max : 0.0;
  }

  Eigen::MatrixXd cls_log(m_count, c_count);
  Eigen::VectorXd cls_max(m_count);
  for (int m = 0; m < m_count; ++m) {
    double row_max = kNegInf;
    for (int c = 0; c < c_count; ++c) {
      const double v = classifier_enabled
                           ? classifier_log_ratio(measurements[m].class_estimate, c + 1,
                                                  sensor.confusion, sensor.clutter_class_pmf)
                           : 0.0;
      cls_log(m, c) = v;
      row_max = std::max(row_max, v);
    }
    cls_max[m] = std::isfinite(row_max) ? row_max : 0.0;
  }

  if (subtract_max) {
    // Clamp at zero: scaling only ever needs to pull large ratios down, and a
    // table whose entries are all tiny (particles far from every measurement)
    // must not blow up the miss terms.
    double log_scale = 0.0;
    for (int m = 0; m < m_count; ++m) {
      log_scale = std::max(log_scale, kin_max[m] + cls_max[m]);
    }
    table.log_scale = std::isfinite(log_scale) ? log_scale : 0.0;
    // Entries more than 60 nats below the table maximum are flushed to exact
    // zero: they are irrelevant next to the O(1) entries and keeping them
    // would fill the downstream matrix products with subnormals.
    constexpr double kLogFloor = -60.0;
    for (int m = 0; m < m_count; ++m) {
      for (int j = 0; j < j_count; ++j) {
        const double e = kin_log(j, m) - kin_max[m];
        table.kinematic(j, m) = e < kLogFloor ? 0.0 : std::exp(e);
      }
      for (int c = 0; c < c_count; ++c) {
        const double e = cls_log(m, c) + kin_max[m] - table.log_scale;
        table.classifier(m, c) = e < kLogFloor ? 0.0 : std::exp(e);
      }
    }
  } else {
    table.kinematic = kin_log.array().exp();
    table.classifier = cls_log.array().exp();
  }
  return table;
}

Eigen::VectorXd measurement_evaluation(const PredictedMessage& pred,
                                       const LikelihoodTable& table,
                                       const SensorModel& sensor) {
  const int m_count = table.num_measurements();
  const double p_d = sensor.detection_prob;
  Eigen::VectorXd beta(m_count + 1);
  beta[0] = table.miss_scale() *
            ((1.0 - p_d) * pred.existence_mass() + pred.nonexistence_mass);
  if (m_count > 0) {
    // class-collapsed weights per measurement: (J x C) * (C x M)
    const Eigen::MatrixXd collapsed = pred.class_weights * table.classifier.transpose();
    beta.tail(m_count) =
        p_d * (table.kinematic.array() * collapsed.array()).colwise().sum().matrix();
  }
  for (int a = 0; a <= m_count; ++a) {
    if (!std::isfinite(beta[a])) {
      throw std::runtime_error("measurement evaluation: non-finite beta entry for a = " +
                               std::to_string(a));
    }
  }
  return beta;
}

Eigen::VectorXd measurement_evaluation(const PredictedMessage& pred,
                                       const std::vector<AugmentedMeasurement>& measurements,
                                       const SensorModel& sensor, bool classifier_enabled) {
  const LikelihoodTable table =
      build_likelihood_table(pred, measurements, sensor, classifier_enabled, false);
  return measurement_evaluation(pred, table, sensor);
}

SensorFactor measurement_update(const PredictedMessage& pred, const LikelihoodTable& table,
                                const Eigen::VectorXd& eta, const SensorModel& sensor) {
  const int m_count = table.num_measurements();
  if (eta.size() != m_count + 1) {
    throw std::invalid_argument("measurement update: eta length does not match measurements");
  }
  const double p_d = sensor.detection_prob;
  const double miss = (1.0 - p_d) * table.miss_scale() * eta[0];

  SensorFactor factor;
  factor.nonexistence_scalar = table.miss_scale() * eta[0];
  if (m_count == 0) {
    factor.gamma =
        Eigen::MatrixXd::Constant(pred.num_particles(), pred.num_classes(), miss);
    return factor;
  }
  const Eigen::MatrixXd weighted =
      table.kinematic * eta.tail(m_count).asDiagonal();  // J x M
  factor.gamma = ((p_d * (weighted * table.classifier)).array() + miss).matrix();
  return factor;
}

AugmentedBelief fuse_and_normalize(const PredictedMessage& pred,
                                   const std::vector<SensorFactor>& factors, int out_particles,
                                   RandomStream& rng) {
  if (factors.empty()) throw std::invalid_argument("fuse: at least one sensor factor required");
  const int j_count = pred.num_particles();
  const int c_count = pred.num_classes();

  Eigen::MatrixXd weights = pred.class_weights;
  double nonexistence = pred.nonexistence_mass;
  for (const auto& f : factors) {
    if (f.gamma.rows() != j_count || f.gamma.cols() != c_count) {
      throw std::invalid_argument("fuse: sensor factor shape mismatch");
    }
    weights.array() *= f.gamma.array();
    nonexistence *= f.nonexistence_scalar;
  }

  const double total = weights.sum() + nonexistence;
  if (!(total > 0.0) || !std::isfinite(total)) {
    std::fprintf(stderr, "spatrack: fused belief has zero mass, resetting to nonexistence\n");
    return AugmentedBelief::nonexistent(out_particles, c_count);
  }
  weights /= total;
  nonexistence /= total;
  const double existence = weights.sum();

  AugmentedBelief out;
  out.particles = Eigen::Matrix4Xd::Zero(4, out_particles);
  out.class_weights = Eigen::MatrixXd::Zero(out_particles, c_count);
  out.nonexistence_mass = nonexistence;
  if (existence <= 0.0) {
    const int keep = std::min(out_particles, j_count);
    out.particles.leftCols(keep) = pred.particles.leftCols(keep);
    out.nonexistence_mass = 1.0;
    return out;
  }

  // Systematic resampling over the flattened (particle, class) atoms; each
  // surviving atom becomes a one-hot class row. Class-major order keeps the
  // resampling stride from aliasing with the class dimension.
  Eigen::VectorXd flat(j_count * c_count);
  for (int c = 0; c < c_count; ++c) {
    for (int j = 0; j < j_count; ++j) flat[c * j_count + j] = weights(j, c);
  }
  const std::vector<int> picks = systematic_resample(flat, out_particles, rng.uniform());
  const double atom_weight = existence / out_particles;
  for (int i = 0; i < out_particles; ++i) {
    const int c = picks[i] / j_count;
    const int j = picks[i] % j_count;
    out.particles.col(i) = pred.particles.col(j);
    out.class_weights(i, c) = atom_weight;
  }
  return out;
}

std::vector<AugmentedBelief> step(const std::vector<AugmentedBelief>& beliefs,
                                  const std::vector<std::vector<AugmentedMeasurement>>& frames,
                                  const std::vector<SensorModel>& sensors,
                                  const MotionModel& motion,
                                  const ClassTransitionMatrix& transitions,
                                  const TrackerParams& params, RandomStream& rng) {
  const int k_count = static_cast<int>(beliefs.size());
  if (frames.size() != sensors.size()) {
    throw std::invalid_argument("step: one measurement list per sensor required");
  }

  std::vector<PredictedMessage> preds;
  preds.reserve(k_count);
  for (const auto& belief : beliefs) {
    preds.push_back(predict(belief, motion, transitions, params.birth_particles, rng));
  }

  std::vector<std::vector<SensorFactor>> factors(k_count);
  for (int s = 0; s < static_cast<int>(sensors.size()); ++s) {
    std::vector<LikelihoodTable> tables;
    tables.reserve(k_count);
    BetaTable beta;
    beta.rows.resize(k_count);
    for (int k = 0; k < k_count; ++k) {
      tables.push_back(build_likelihood_table(preds[k], frames[s], sensors[s],
                                              params.classifier_enabled, true));
      beta.rows[k] = measurement_evaluation(preds[k], tables[k], sensors[s]);
    }
    const EtaTable eta = run_bp(beta, {params.bp_max_iterations, params.bp_tolerance});
    for (int k = 0; k < k_count; ++k) {
      factors[k].push_back(measurement_update(preds[k], tables[k], eta.rows[k], sensors[s]));
    }
  }

  std::vector<AugmentedBelief> out;
  out.reserve(k_count);
  for (int k = 0; k < k_count; ++k) {
    out.push_back(fuse_and_normalize(preds[k], factors[k], params.num_particles, rng));
  }
  return out;
}

Tracker::Tracker(TrackerParams params, MotionModel motion, ClassTransitionMatrix transitions,
                 std::vector<SensorModel> sensors, std::uint64_t seed)
    : params_(params),
      motion_(std::move(motion)),
      transitions_(std::move(transitions)),
      sensors_(std::move(sensors)),
      rng_(seed) {
  motion_.validate();
  if (sensors_.empty()) throw std::invalid_argument("Tracker: at least one sensor required");
  for (const auto& s : sensors_) s.validate();
  beliefs_.assign(params_.num_targets,
                  AugmentedBelief::nonexistent(params_.num_particles,
                                               transitions_.num_classes()));
}

void Tracker::advance(const std::vector<std::vector<AugmentedMeasurement>>& frames) {
  beliefs_ = step(beliefs_, frames, sensors_, motion_, transitions_, params_, rng_);
}

}  // namespace spatrack
