#pragma once

#include <Eigen/Dense>
#include <vector>

#include "spatrack/common.hpp"

namespace spatrack {

/// A point with a track label; label -1 means unlabeled.
struct LabeledPoint {
  Vec2 position = Vec2::Zero();
  int label = -1;
};

using PointSet = std::vector<LabeledPoint>;
/// One PointSet per time step.
using PointSequence = std::vector<PointSet>;

struct AssignmentResult {
  std::vector<int> assignment;  // per row: assigned column, or -1
  double total_cost = 0.0;
};

/// Minimum-cost matching of min(rows, cols) pairs of a rectangular,
/// nonnegative, finite cost matrix (shortest augmenting path).
AssignmentResult optimal_assignment(const Eigen::MatrixXd& cost);

/// Optimal sub-pattern assignment distance of order p with cutoff c:
/// localization on the optimally matched min-cardinality pairs with
/// distances saturated at c, cardinality mismatch charged c per element,
/// order-p mean over the larger cardinality. Empty vs empty is 0.
double ospa(const PointSet& truth, const PointSet& estimate, double order = 1.0,
            double cutoff = 20.0);

/// Generalized OSPA with alpha = 2: p-th root of the summed min(d, c)^p
/// matched cost plus (c^p / 2) per missed or false element; no division by
/// cardinality.
double gospa(const PointSet& truth, const PointSet& estimate, double order = 1.0,
             double cutoff = 20.0);

/// OSPA-for-tracks: a global truth-to-estimate label correspondence is fixed
/// by a minimum-cost assignment on time-summed track distances; each step is
/// then scored like OSPA with base distance min((d^p + delta^p)^(1/p), c),
/// where delta is `label_penalty` for pairs that violate the correspondence
/// and 0 otherwise. Returns the per-step series.
Eigen::VectorXd ospa_t(const PointSequence& truth, const PointSequence& estimate,
                       double order = 1.0, double cutoff = 20.0, double label_penalty = 20.0);

/// False-alarm rate: an estimate is false at a step when no truth target is
/// within `gate` of it under the per-step optimal assignment; the count of
/// false estimate-steps is divided by surveillance area and duration.
double far(const PointSequence& estimate, const PointSequence& truth, double roi_area_km2,
           double duration_seconds, double gate = 20.0);

/// Aggregated tracking scores plus their per-step series.
struct MetricReport {
  double mgospa = 0.0;   // m
  double mospa = 0.0;    // m
  double mospa_t = 0.0;  // m
  double far = 0.0;      // 1 / (km^2 s)
  Eigen::VectorXd gospa_series;
  Eigen::VectorXd ospa_series;
  Eigen::VectorXd ospa_t_series;
};

/// Scores an estimate sequence against truth with the standard parameters
/// (order 1, cutoff 20 m, label penalty 20 m, gate 20 m).
MetricReport score_tracks(const PointSequence& truth, const PointSequence& estimate,
                          double roi_area_km2, double duration_seconds);

}  // namespace spatrack
