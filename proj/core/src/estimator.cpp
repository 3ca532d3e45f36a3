#include "spatrack/estimator.hpp"

namespace spatrack {

std::vector<TrackEstimate> detect_and_estimate(const std::vector<AugmentedBelief>& beliefs,
                                               double threshold, int time_index) {
  std::vector<TrackEstimate> out;
  for (std::size_t k = 0; k < beliefs.size(); ++k) {
    const auto& belief = beliefs[k];
    const double existence = belief.existence_mass();
    if (!(existence > threshold)) continue;

    const Eigen::VectorXd particle_weights = belief.class_weights.rowwise().sum();
    const Vec4 mean = (belief.particles * particle_weights) / existence;

    TrackEstimate est;
    est.pt_index = static_cast<int>(k);
    est.label = static_cast<int>(k);
    est.time = time_index;
    est.position = mean.head<2>();
    est.velocity = mean.tail<2>();
    est.existence_prob = existence;
    est.class_pmf = belief.class_masses() / existence;
    out.push_back(std::move(est));
  }
  return out;
}

}  // namespace spatrack
