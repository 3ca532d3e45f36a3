#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace spatrack {

/// Per-target association evidence: row k holds beta_k(a) for a in {0..M},
/// where a = 0 means "no measurement" and a = m means "measurement m".
struct BetaTable {
  std::vector<Eigen::VectorXd> rows;

  int num_targets() const { return static_cast<int>(rows.size()); }
  int num_measurements() const {
    return rows.empty() ? 0 : static_cast<int>(rows.front().size()) - 1;
  }
};

/// Product of converged measurement-to-target messages, same shape as BetaTable.
struct EtaTable {
  std::vector<Eigen::VectorXd> rows;
};

struct BpOptions {
  int max_iterations = 20;   // P
  double tolerance = 1e-6;   // early exit on max-abs change of nu messages
};

/// Consistency indicator for the pair of association variables: zero iff
/// (a = m and b != k) or (a != m and b = k). Indices k in {1..K}, m in {1..M},
/// a in {0..M}, b in {0..K}.
int consistency_indicator(int a, int b, int k, int m, int num_targets, int num_measurements);

/// Iterative sum-product data association. Messages are normalized to sum to
/// one each iteration; iteration stops after `max_iterations` rounds or when
/// the largest absolute change across nu messages drops below `tolerance`.
EtaTable run_bp(const BetaTable& beta, const BpOptions& options = {});

/// Posterior association pmfs: normalize beta_k(a) * eta_k(a) per target.
std::vector<Eigen::VectorXd> association_marginals(const BetaTable& beta, const EtaTable& eta);

/// Exact per-target association marginals by enumerating every globally
/// consistent assignment (one-to-one partial matchings) weighted by the beta
/// products. Throws when the instance exceeds `max_configurations`.
std::vector<Eigen::VectorXd> exact_association_oracle(const BetaTable& beta,
                                                      std::size_t max_configurations = 10'000'000);

}  // namespace spatrack
