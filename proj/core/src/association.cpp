#include "spatrack/association.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spatrack {

namespace {

void validate_beta(const BetaTable& beta) {
  const int m_count = beta.num_measurements();
  for (std::size_t k = 0; k < beta.rows.size(); ++k) {
    const auto& row = beta.rows[k];
    if (static_cast<int>(row.size()) != m_count + 1) {
      throw std::invalid_argument("run_bp: beta rows have inconsistent lengths");
    }
    bool any_positive = false;
    for (int a = 0; a <= m_count; ++a) {
      const double v = row[a];
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument("run_bp: beta(" + std::to_string(k) + ", " +
                                    std::to_string(a) + ") is negative or non-finite");
      }
      any_positive = any_positive || v > 0.0;
    }
    if (!any_positive) {
      throw std::invalid_argument("run_bp: beta row " + std::to_string(k) + " is all zero");
    }
  }
}

// Normalize a message to sum to one; SPA is invariant to the scale.
void normalize_message(Eigen::VectorXd& msg, int iteration) {
  double sum = 0.0;
  for (int i = 0; i < msg.size(); ++i) sum += msg[i];
  if (!std::isfinite(sum) || sum <= 0.0) {
    throw std::runtime_error("run_bp: degenerate message at iteration " +
                             std::to_string(iteration));
  }
  msg /= sum;
}

}  // namespace

int consistency_indicator(int a, int b, int k, int m, int num_targets, int num_measurements) {
  if (a < 0 || a > num_measurements || b < 0 || b > num_targets) {
    throw std::out_of_range("consistency_indicator: association value out of range");
  }
  if (k < 1 || k > num_targets || m < 1 || m > num_measurements) {
    throw std::out_of_range("consistency_indicator: target/measurement index out of range");
  }
  if (a == m && b != k) return 0;
  if (a != m && b == k) return 0;
  return 1;
}

EtaTable run_bp(const BetaTable& beta, const BpOptions& options) {
  validate_beta(beta);
  const int K = beta.num_targets();
  const int M = beta.num_measurements();

  EtaTable eta;
  eta.rows.assign(K, Eigen::VectorXd());
  if (M == 0) {
    for (int k = 0; k < K; ++k) eta.rows[k] = Eigen::VectorXd::Ones(1);
    return eta;
  }

  // zeta[k][m](b), b in {0..K}; nu[m][k](a), a in {0..M}. Indices 0-based,
  // target k+1 and measurement m+1 in the 1-based convention of the updates.
  std::vector<std::vector<Eigen::VectorXd>> zeta(K, std::vector<Eigen::VectorXd>(M));
  std::vector<std::vector<Eigen::VectorXd>> nu(M, std::vector<Eigen::VectorXd>(K));

  // zeta^(0)(b) = sum_a beta(a) Psi(a, b): at b = k only the a = m term
  // survives; elsewhere every term except a = m survives.
  for (int k = 0; k < K; ++k) {
    const auto& b_row = beta.rows[k];
    for (int m = 0; m < M; ++m) {
      double elsewhere = 0.0;
      for (int a = 0; a <= M; ++a) {
        if (a == m + 1) continue;
        elsewhere += b_row[a];
      }
      Eigen::VectorXd msg = Eigen::VectorXd::Constant(K + 1, elsewhere);
      msg[k + 1] = b_row[m + 1];
      normalize_message(msg, 0);
      zeta[k][m] = msg;
    }
  }
  for (int m = 0; m < M; ++m) {
    for (int k = 0; k < K; ++k) nu[m][k] = Eigen::VectorXd::Zero(M + 1);
  }

  for (int p = 1; p <= options.max_iterations; ++p) {
    double delta = 0.0;

    // nu update: nu_{m->k}(a) = sum_b Psi(a, b) prod_{k' != k} zeta_{k'->m}(b).
    // Only two distinct values exist (a = m versus a != m); each is computed
    // with the literal summation/product order.
    for (int m = 0; m < M; ++m) {
      for (int k = 0; k < K; ++k) {
        double at_match = 1.0;
        for (int kp = 0; kp < K; ++kp) {
          if (kp == k) continue;
          at_match *= zeta[kp][m][k + 1];
        }
        double elsewhere = 0.0;
        for (int b = 0; b <= K; ++b) {
          if (b == k + 1) continue;
          double prod = 1.0;
          for (int kp = 0; kp < K; ++kp) {
            if (kp == k) continue;
            prod *= zeta[kp][m][b];
          }
          elsewhere += prod;
        }
        Eigen::VectorXd msg = Eigen::VectorXd::Constant(M + 1, elsewhere);
        msg[m + 1] = at_match;
        normalize_message(msg, p);
        for (int a = 0; a <= M; ++a) {
          delta = std::max(delta, std::abs(msg[a] - nu[m][k][a]));
        }
        nu[m][k] = msg;
      }
    }

    const bool converged = delta < options.tolerance;
    if (converged || p == options.max_iterations) break;

    // zeta update: zeta_{k->m}(b) = sum_a beta(a) Psi(a, b) prod_{m' != m} nu_{m'->k}(a).
    for (int k = 0; k < K; ++k) {
      const auto& b_row = beta.rows[k];
      for (int m = 0; m < M; ++m) {
        double at_match = 1.0;
        for (int mp = 0; mp < M; ++mp) {
          if (mp == m) continue;
          at_match *= nu[mp][k][m + 1];
        }
        at_match *= b_row[m + 1];
        double elsewhere = 0.0;
        for (int a = 0; a <= M; ++a) {
          if (a == m + 1) continue;
          double prod = 1.0;
          for (int mp = 0; mp < M; ++mp) {
            if (mp == m) continue;
            prod *= nu[mp][k][a];
          }
          elsewhere += b_row[a] * prod;
        }
        Eigen::VectorXd msg = Eigen::VectorXd::Constant(K + 1, elsewhere);
        msg[k + 1] = at_match;
        normalize_message(msg, p);
        zeta[k][m] = msg;
      }
    }
  }

  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd row = Eigen::VectorXd::Ones(M + 1);
    for (int m = 0; m < M; ++m) {
      for (int a = 0; a <= M; ++a) row[a] *= nu[m][k][a];
    }
    normalize_message(row, options.max_iterations);
    eta.rows[k] = row;
  }
  return eta;
}

std::vector<Eigen::VectorXd> association_marginals(const BetaTable& beta, const EtaTable& eta) {
  if (beta.rows.size() != eta.rows.size()) {
    throw std::invalid_argument("association_marginals: table sizes disagree");
  }
  std::vector<Eigen::VectorXd> out(beta.rows.size());
  for (std::size_t k = 0; k < beta.rows.size(); ++k) {
    Eigen::VectorXd m = beta.rows[k].cwiseProduct(eta.rows[k]);
    const double sum = m.sum();
    if (!(sum > 0.0) || !std::isfinite(sum)) {
      throw std::runtime_error("association_marginals: zero or non-finite total for target " +
                               std::to_string(k));
    }
    out[k] = m / sum;
  }
  return out;
}

namespace {

double count_matchings(int targets, int measurements) {
  // sum_j C(K, j) C(M, j) j!, with term_j = prod_{i=1..j} (K-i+1)(M-i+1)/i
  double total = 0.0;
  double term = 1.0;  // j = 0
  const int j_max = std::min(targets, measurements);
  for (int j = 0; j <= j_max; ++j) {
    if (j > 0) {
      term *= static_cast<double>(targets - j + 1) *
              static_cast<double>(measurements - j + 1) / static_cast<double>(j);
    }
    total += term;
    if (!std::isfinite(total)) break;
  }
  return total;
}

void enumerate(const BetaTable& beta, int k, double weight, std::vector<char>& used,
               std::vector<int>& choice, double& z, std::vector<Eigen::VectorXd>& marg) {
  const int K = beta.num_targets();
  const int M = beta.num_measurements();
  if (k == K) {
    z += weight;
    for (int kk = 0; kk < K; ++kk) marg[kk][choice[kk]] += weight;
    return;
  }
  for (int a = 0; a <= M; ++a) {
    if (a > 0 && used[a]) continue;
    const double w = weight * beta.rows[k][a];
    if (w == 0.0) continue;
    if (a > 0) used[a] = 1;
    choice[k] = a;
    enumerate(beta, k + 1, w, used, choice, z, marg);
    if (a > 0) used[a] = 0;
  }
}

}  // namespace

std::vector<Eigen::VectorXd> exact_association_oracle(const BetaTable& beta,
                                                      std::size_t max_configurations) {
  validate_beta(beta);
  const int K = beta.num_targets();
  const int M = beta.num_measurements();
  if (count_matchings(K, M) > static_cast<double>(max_configurations)) {
    throw std::invalid_argument("exact_association_oracle: instance too large to enumerate");
  }
  std::vector<Eigen::VectorXd> marg(K, Eigen::VectorXd::Zero(M + 1));
  std::vector<char> used(M + 1, 0);
  std::vector<int> choice(K, 0);
  double z = 0.0;
  enumerate(beta, 0, 1.0, used, choice, z, marg);
  if (!(z > 0.0)) {
    throw std::runtime_error("exact_association_oracle: all consistent assignments have zero weight");
  }
  for (auto& row : marg) row /= z;
  return marg;
}

}  // namespace spatrack
