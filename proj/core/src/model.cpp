#include "spatrack/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace spatrack {

namespace {

constexpr double kColumnSumReject = 1e-6;

void check_stochastic_columns(const Eigen::MatrixXd& m, const char* what) {
  for (int j = 0; j < m.cols(); ++j) {
    double sum = 0.0;
    for (int i = 0; i < m.rows(); ++i) {
      const double v = m(i, j);
      if (!(v >= 0.0 && v <= 1.0 + kColumnSumReject)) {
        throw std::invalid_argument(std::string(what) + ": entry out of [0, 1] in column " +
                                    std::to_string(j));
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kColumnSumReject) {
      throw std::invalid_argument(std::string(what) + ": column " + std::to_string(j) +
                                  " sums to " + std::to_string(sum));
    }
  }
}

// Rescale each column to sum exactly to 1 (construction tolerance 1e-9).
void normalize_columns(Eigen::MatrixXd& m) {
  for (int j = 0; j < m.cols(); ++j) {
    m.col(j) /= m.col(j).sum();
  }
}

}  // namespace

ClassTransitionMatrix::ClassTransitionMatrix(Eigen::MatrixXd entries)
    : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() < 1) {
    throw std::invalid_argument("ClassTransitionMatrix: expected square C x C matrix");
  }
  check_stochastic_columns(entries_, "ClassTransitionMatrix");
  normalize_columns(entries_);
}

ClassTransitionMatrix ClassTransitionMatrix::uniform_diagonal(int num_classes,
                                                              double stay_prob) {
  if (num_classes < 1) throw std::invalid_argument("uniform_diagonal: C must be >= 1");
  if (num_classes == 1) return ClassTransitionMatrix(Eigen::MatrixXd::Ones(1, 1));
  const double off = (1.0 - stay_prob) / (num_classes - 1);
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(num_classes, num_classes, off);
  m.diagonal().setConstant(stay_prob);
  return ClassTransitionMatrix(std::move(m));
}

double ClassTransitionMatrix::prob(int next_class, int prev_class) const {
  if (next_class < 1 || next_class > num_classes() || prev_class < 1 ||
      prev_class > num_classes()) {
    throw std::out_of_range("ClassTransitionMatrix::prob: class index out of range");
  }
  return entries_(next_class - 1, prev_class - 1);
}

Eigen::VectorXd ClassTransitionMatrix::column(int prev_class) const {
  if (prev_class < 1 || prev_class > num_classes()) {
    throw std::out_of_range("ClassTransitionMatrix::column: class index out of range");
  }
  return entries_.col(prev_class - 1);
}

ConfusionMatrix::ConfusionMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.cols() < 1 || entries_.rows() != entries_.cols() + 1) {
    throw std::invalid_argument("ConfusionMatrix: expected (C+1) x C matrix");
  }
  check_stochastic_columns(entries_, "ConfusionMatrix");
  normalize_columns(entries_);
}

double ConfusionMatrix::prob(int verdict, int target_class) const {
  if (verdict < 0 || verdict > num_classes() || target_class < 1 ||
      target_class > num_classes()) {
    throw std::out_of_range("ConfusionMatrix::prob: index out of range");
  }
  return entries_(verdict, target_class - 1);
}

Eigen::VectorXd ConfusionMatrix::column(int target_class) const {
  if (target_class < 1 || target_class > num_classes()) {
    throw std::out_of_range("ConfusionMatrix::column: class index out of range");
  }
  return entries_.col(target_class - 1);
}

ClutterClassPmf::ClutterClassPmf(Eigen::VectorXd probabilities)
    : probabilities_(std::move(probabilities)) {
  if (probabilities_.size() < 2) {
    throw std::invalid_argument("ClutterClassPmf: expected C+1 entries with C >= 1");
  }
  double sum = 0.0;
  for (int i = 0; i < probabilities_.size(); ++i) {
    if (probabilities_[i] < 0.0) {
      throw std::invalid_argument("ClutterClassPmf: negative probability");
    }
    sum += probabilities_[i];
  }
  if (std::abs(sum - 1.0) > kColumnSumReject) {
    throw std::invalid_argument("ClutterClassPmf: probabilities sum to " + std::to_string(sum));
  }
  probabilities_ /= sum;
}

double ClutterClassPmf::prob(int verdict) const {
  if (verdict < 0 || verdict > num_classes()) {
    throw std::out_of_range("ClutterClassPmf::prob: verdict out of range");
  }
  return probabilities_[verdict];
}

void SensorModel::validate() const {
  if (!(sigma_range > 0.0)) throw std::invalid_argument("SensorModel: sigma_range must be > 0");
  if (!(sigma_bearing > 0.0)) throw std::invalid_argument("SensorModel: sigma_bearing must be > 0");
  if (detection_prob < 0.0 || detection_prob > 1.0) {
    throw std::invalid_argument("SensorModel: detection_prob must be in [0, 1]");
  }
  if (clutter_mean < 0.0) throw std::invalid_argument("SensorModel: clutter_mean must be >= 0");
  if (!(roi.area() > 0.0)) throw std::invalid_argument("SensorModel: roi must have positive area");
  if (confusion.num_classes() != clutter_class_pmf.num_classes()) {
    throw std::invalid_argument("SensorModel: confusion and clutter class pmf disagree on C");
  }
}

MotionModel MotionModel::nearly_constant_velocity(double step_seconds, double accel_std) {
  MotionModel m;
  m.step_seconds = step_seconds;
  m.accel_std = accel_std;
  const double t = step_seconds;
  m.transition << 1, 0, t, 0,
                  0, 1, 0, t,
                  0, 0, 1, 0,
                  0, 0, 0, 1;
  m.noise_gain << 0.5 * t * t, 0,
                  0, 0.5 * t * t,
                  t, 0,
                  0, t;
  return m;
}

void MotionModel::validate() const {
  if (!transition.allFinite() || !noise_gain.allFinite()) {
    throw std::invalid_argument("MotionModel: non-finite transition/noise matrices");
  }
  if (survival_prob < 0.0 || survival_prob > 1.0 || birth_prob < 0.0 || birth_prob > 1.0) {
    throw std::invalid_argument("MotionModel: survival/birth probabilities must be in [0, 1]");
  }
  if (accel_std < 0.0) throw std::invalid_argument("MotionModel: accel_std must be >= 0");
}

double kinematic_transition_density(const KinematicState& x_next,
                                    const KinematicState& x_prev,
                                    const MotionModel& model,
                                    [[maybe_unused]] int class_index) {
  const Vec4 diff = x_next.as_vector() - model.transition * x_prev.as_vector();
  // Recover the 2-D noise sample; off-manifold states have zero density.
  const Eigen::Matrix<double, 4, 2>& gain = model.noise_gain;
  const Vec2 u = (gain.transpose() * gain).ldlt().solve(gain.transpose() * diff);
  const Vec4 residual = diff - gain * u;
  const double manifold_tol = 1e-9 * (1.0 + diff.norm());
  if (residual.norm() > manifold_tol) return 0.0;
  if (model.accel_std == 0.0) {
    return u.norm() <= manifold_tol ? std::numeric_limits<double>::infinity() : 0.0;
  }
  const double var = model.accel_std * model.accel_std;
  const double quad = u.squaredNorm() / var;
  return std::exp(-0.5 * quad) / (2.0 * std::numbers::pi * var);
}

Eigen::VectorXd class_transition_pmf(bool prev_exists, int prev_class,
                                     [[maybe_unused]] const KinematicState& x_prev,
                                     const ClassTransitionMatrix& transitions) {
  const int c = transitions.num_classes();
  if (prev_class < 1 || prev_class > c) {
    throw std::out_of_range("class_transition_pmf: prev_class out of range");
  }
  if (!prev_exists) {
    return Eigen::VectorXd::Constant(c, 1.0 / c);
  }
  return transitions.column(prev_class);
}

std::pair<double, double> predicted_range_bearing(const KinematicState& x,
                                                  const SensorModel& sensor) {
  const Vec2 d = x.position - sensor.position;
  return {d.norm(), std::atan2(d.y(), d.x())};
}

double measurement_likelihood(double range, double bearing, const KinematicState& x,
                              const SensorModel& sensor) {
  const Vec2 d = x.position - sensor.position;
  const double predicted_range = d.norm();
  if (predicted_range == 0.0) return 0.0;  // bearing undefined at the sensor
  const double predicted_bearing = std::atan2(d.y(), d.x());
  const double dr = (range - predicted_range) / sensor.sigma_range;
  const double db = wrap_angle(bearing - predicted_bearing) / sensor.sigma_bearing;
  const double norm = 2.0 * std::numbers::pi * sensor.sigma_range * sensor.sigma_bearing;
  return std::exp(-0.5 * (dr * dr + db * db)) / norm;
}

double clutter_density(double range, double bearing, const SensorModel& sensor) {
  if (range < 0.0) return 0.0;
  const Vec2 p = sensor.position + range * Vec2(std::cos(bearing), std::sin(bearing));
  if (!sensor.roi.contains(p)) return 0.0;
  return range / sensor.roi.area();
}

double classifier_log_ratio(int verdict, int class_index, const ConfusionMatrix& confusion,
                            const ClutterClassPmf& clutter_pmf) {
  const double g = confusion.prob(verdict, class_index);
  const double p0 = clutter_pmf.prob(verdict);
  if (p0 == 0.0) {
    if (g == 0.0) return -std::numeric_limits<double>::infinity();
    throw std::domain_error(
        "classifier ratio: clutter pmf assigns zero mass to verdict " + std::to_string(verdict) +
        " that the confusion matrix can produce (degenerate clutter model)");
  }
  return std::log(g) - std::log(p0);
}

double augmented_log_likelihood_ratio(const AugmentedMeasurement& z, const KinematicState& x,
                                      int class_index, const SensorModel& sensor) {
  const double f0 = clutter_density(z.range, z.bearing, sensor);
  const double fq = measurement_likelihood(z.range, z.bearing, x, sensor);
  const double cls = classifier_log_ratio(z.class_estimate, class_index, sensor.confusion,
                                          sensor.clutter_class_pmf);
  if (f0 == 0.0) {
    if (fq == 0.0 || cls == -std::numeric_limits<double>::infinity()) {
      return -std::numeric_limits<double>::infinity();
    }
    throw std::domain_error(
        "likelihood ratio: measurement outside the clutter support (f0 = 0)");
  }
  if (sensor.clutter_mean == 0.0) {
    throw std::domain_error("likelihood ratio: clutter_mean is zero (ratio undefined)");
  }
  return std::log(fq) + cls - std::log(sensor.clutter_mean * f0);
}

double augmented_likelihood_ratio(const AugmentedMeasurement& z, const KinematicState& x,
                                  int class_index, const SensorModel& sensor) {
  return std::exp(augmented_log_likelihood_ratio(z, x, class_index, sensor));
}

}  // namespace spatrack
