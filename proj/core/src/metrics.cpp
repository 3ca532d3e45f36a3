#include "spatrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace spatrack {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shortest-augmenting-path assignment with potentials; expects rows <= cols.
std::vector<int> solve_rows_leq_cols(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

Eigen::MatrixXd pairwise_cost(const PointSet& x, const PointSet& y, double order,
                              double cutoff) {
  Eigen::MatrixXd cost(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) {
      cost(i, j) = std::pow(std::min((x[i].position - y[j].position).norm(), cutoff), order);
    }
  }
  return cost;
}

}  // namespace

AssignmentResult optimal_assignment(const Eigen::MatrixXd& cost) {
  if (cost.rows() == 0 || cost.cols() == 0) {
    return {{}, 0.0};
  }
  if (!cost.allFinite() || (cost.array() < 0.0).any()) {
    throw std::invalid_argument("optimal_assignment: cost must be nonnegative and finite");
  }
  AssignmentResult result;
  if (cost.rows() <= cost.cols()) {
    result.assignment = solve_rows_leq_cols(cost);
  } else {
    const std::vector<int> col_to_row = solve_rows_leq_cols(cost.transpose());
    result.assignment.assign(cost.rows(), -1);
    for (std::size_t j = 0; j < col_to_row.size(); ++j) {
      result.assignment[col_to_row[j]] = static_cast<int>(j);
    }
  }
  for (std::size_t i = 0; i < result.assignment.size(); ++i) {
    if (result.assignment[i] >= 0) result.total_cost += cost(i, result.assignment[i]);
  }
  return result;
}

double ospa(const PointSet& truth, const PointSet& estimate, double order, double cutoff) {
  if (!(cutoff > 0.0)) throw std::invalid_argument("ospa: cutoff must be positive");
  const std::size_t n = truth.size();
  const std::size_t m = estimate.size();
  if (n == 0 && m == 0) return 0.0;
  const double n_max = static_cast<double>(std::max(n, m));
  const double card_penalty =
      std::pow(cutoff, order) * static_cast<double>(std::max(n, m) - std::min(n, m));
  if (n == 0 || m == 0) {
    return std::pow(card_penalty / n_max, 1.0 / order);
  }
  const auto assignment = optimal_assignment(pairwise_cost(truth, estimate, order, cutoff));
  return std::pow((assignment.total_cost + card_penalty) / n_max, 1.0 / order);
}

double gospa(const PointSet& truth, const PointSet& estimate, double order, double cutoff) {
  if (!(cutoff > 0.0)) throw std::invalid_argument("gospa: cutoff must be positive");
  const std::size_t n = truth.size();
  const std::size_t m = estimate.size();
  if (n == 0 && m == 0) return 0.0;
  const double unmatched =
      0.5 * std::pow(cutoff, order) * static_cast<double>(std::max(n, m) - std::min(n, m));
  if (n == 0 || m == 0) return std::pow(unmatched, 1.0 / order);
  const auto assignment = optimal_assignment(pairwise_cost(truth, estimate, order, cutoff));
  return std::pow(assignment.total_cost + unmatched, 1.0 / order);
}

namespace {

// Time-summed track distance used to fix the global label correspondence:
// matched steps contribute the saturated distance, steps where exactly one
// of the two tracks exists contribute the cutoff.
Eigen::MatrixXd track_distance_matrix(const PointSequence& truth, const PointSequence& estimate,
                                      const std::vector<int>& truth_labels,
                                      const std::vector<int>& est_labels, double order,
                                      double cutoff) {
  const std::size_t steps = truth.size();
  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(truth_labels.size(), est_labels.size());
  const double miss = std::pow(cutoff, order);
  std::map<int, std::size_t> t_index, e_index;
  for (std::size_t i = 0; i < truth_labels.size(); ++i) t_index[truth_labels[i]] = i;
  for (std::size_t j = 0; j < est_labels.size(); ++j) e_index[est_labels[j]] = j;

  for (std::size_t n = 0; n < steps; ++n) {
    std::map<std::size_t, Vec2> t_present, e_present;
    for (const auto& pt : truth[n]) t_present[t_index.at(pt.label)] = pt.position;
    for (const auto& pt : estimate[n]) e_present[e_index.at(pt.label)] = pt.position;
    for (std::size_t i = 0; i < truth_labels.size(); ++i) {
      const bool t_here = t_present.count(i) > 0;
      for (std::size_t j = 0; j < est_labels.size(); ++j) {
        const bool e_here = e_present.count(j) > 0;
        if (t_here && e_here) {
          cost(i, j) +=
              std::pow(std::min((t_present[i] - e_present[j]).norm(), cutoff), order);
        } else if (t_here != e_here) {
          cost(i, j) += miss;
        }
      }
    }
  }
  return cost;
}

std::vector<int> collect_labels(const PointSequence& seq) {
  std::vector<int> labels;
  for (const auto& set : seq) {
    for (const auto& pt : set) {
      if (pt.label < 0) {
        throw std::invalid_argument("ospa_t: every point needs a track label");
      }
      if (std::find(labels.begin(), labels.end(), pt.label) == labels.end()) {
        labels.push_back(pt.label);
      }
    }
  }
  std::sort(labels.begin(), labels.end());
  return labels;
}

}  // namespace

Eigen::VectorXd ospa_t(const PointSequence& truth, const PointSequence& estimate, double order,
                       double cutoff, double label_penalty) {
  if (truth.size() != estimate.size()) {
    throw std::invalid_argument("ospa_t: sequences must cover the same time axis");
  }
  const std::vector<int> truth_labels = collect_labels(truth);
  const std::vector<int> est_labels = collect_labels(estimate);

  // Global correspondence between truth and estimate labels.
  std::map<std::pair<int, int>, bool> corresponds;
  if (!truth_labels.empty() && !est_labels.empty()) {
    const auto matrix =
        track_distance_matrix(truth, estimate, truth_labels, est_labels, order, cutoff);
    const auto assignment = optimal_assignment(matrix);
    for (std::size_t i = 0; i < assignment.assignment.size(); ++i) {
      if (assignment.assignment[i] >= 0) {
        corresponds[{truth_labels[i], est_labels[assignment.assignment[i]]}] = true;
      }
    }
  }

  Eigen::VectorXd series(truth.size());
  for (std::size_t n = 0; n < truth.size(); ++n) {
    const auto& t_set = truth[n];
    const auto& e_set = estimate[n];
    const std::size_t nt = t_set.size();
    const std::size_t ne = e_set.size();
    if (nt == 0 && ne == 0) {
      series[n] = 0.0;
      continue;
    }
    const double n_max = static_cast<double>(std::max(nt, ne));
    const double card =
        std::pow(cutoff, order) * static_cast<double>(std::max(nt, ne) - std::min(nt, ne));
    if (nt == 0 || ne == 0) {
      series[n] = std::pow(card / n_max, 1.0 / order);
      continue;
    }
    Eigen::MatrixXd cost(nt, ne);
    for (std::size_t i = 0; i < nt; ++i) {
      for (std::size_t j = 0; j < ne; ++j) {
        const double d = (t_set[i].position - e_set[j].position).norm();
        const double delta =
            corresponds.count({t_set[i].label, e_set[j].label}) ? 0.0 : label_penalty;
        const double base = std::min(
            std::pow(std::pow(d, order) + std::pow(delta, order), 1.0 / order), cutoff);
        cost(i, j) = std::pow(base, order);
      }
    }
    const auto assignment = optimal_assignment(cost);
    series[n] = std::pow((assignment.total_cost + card) / n_max, 1.0 / order);
  }
  return series;
}

double far(const PointSequence& estimate, const PointSequence& truth, double roi_area_km2,
           double duration_seconds, double gate) {
  if (!(roi_area_km2 > 0.0)) throw std::invalid_argument("far: area must be positive");
  if (!(duration_seconds > 0.0)) throw std::invalid_argument("far: duration must be positive");
  if (estimate.size() != truth.size()) {
    throw std::invalid_argument("far: sequences must cover the same time axis");
  }
  std::size_t false_steps = 0;
  for (std::size_t n = 0; n < estimate.size(); ++n) {
    const auto& e_set = estimate[n];
    const auto& t_set = truth[n];
    if (e_set.empty()) continue;
    if (t_set.empty()) {
      false_steps += e_set.size();
      continue;
    }
    Eigen::MatrixXd cost(e_set.size(), t_set.size());
    for (std::size_t i = 0; i < e_set.size(); ++i) {
      for (std::size_t j = 0; j < t_set.size(); ++j) {
        cost(i, j) = std::min((e_set[i].position - t_set[j].position).norm(), gate);
      }
    }
    const auto assignment = optimal_assignment(cost);
    for (std::size_t i = 0; i < e_set.size(); ++i) {
      const int j = assignment.assignment[i];
      if (j < 0 || (e_set[i].position - t_set[j].position).norm() > gate) {
        ++false_steps;
      }
    }
  }
  return static_cast<double>(false_steps) / (roi_area_km2 * duration_seconds);
}

MetricReport score_tracks(const PointSequence& truth, const PointSequence& estimate,
                          double roi_area_km2, double duration_seconds) {
  if (truth.size() != estimate.size()) {
    throw std::invalid_argument("score_tracks: sequences must cover the same time axis");
  }
  MetricReport report;
  const std::size_t steps = truth.size();
  report.gospa_series.resize(steps);
  report.ospa_series.resize(steps);
  for (std::size_t n = 0; n < steps; ++n) {
    report.gospa_series[n] = gospa(truth[n], estimate[n]);
    report.ospa_series[n] = ospa(truth[n], estimate[n]);
  }
  report.ospa_t_series = ospa_t(truth, estimate);
  report.mgospa = steps == 0 ? 0.0 : report.gospa_series.mean();
  report.mospa = steps == 0 ? 0.0 : report.ospa_series.mean();
  report.mospa_t = steps == 0 ? 0.0 : report.ospa_t_series.mean();
  report.far = far(estimate, truth, roi_area_km2, duration_seconds);
  return report;
}

}  // namespace spatrack
