#pragma once

// Generalised advantage estimates written as the explicit discounted sum
//   A_t = sum_{l >= 0} (gamma * lambda)^l * delta_{t+l}
// cut off after the first step that ends an episode. Used only by tests.

#include <Eigen/Core>

#include "dtpo/advantage.hpp"

namespace oracle {

inline Eigen::VectorXd explicit_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                                    const Eigen::VectorXd& next_values,
                                    const dtpo::FlagVector& terminated,
                                    const dtpo::FlagVector& truncated, double gamma,
                                    double lambda) {
  const Eigen::Index T = rewards.size();
  Eigen::VectorXd delta(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const double successor = terminated[t] ? 0.0 : next_values[t];
    delta[t] = rewards[t] + gamma * successor - values[t];
  }
  Eigen::VectorXd out(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    double sum = 0.0;
    double weight = 1.0;
    for (Eigen::Index u = t; u < T; ++u) {
      sum += weight * delta[u];
      if (terminated[u] || truncated[u]) break;
      weight *= gamma * lambda;
    }
    out[t] = sum;
  }
  return out;
}

}  // namespace oracle
