#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>

#include "dtpo/error.hpp"

namespace dtpo {

using FlagVector = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// T consecutive timesteps collected under one policy. Episodes are laid
/// out back to back; the last one may be unfinished.
struct RolloutBatch {
  Eigen::MatrixXd observations;    // T x m
  Eigen::VectorXi actions;         // T
  Eigen::VectorXd rewards;         // T
  FlagVector terminated;           // T
  FlagVector truncated;            // T
  Eigen::MatrixXd behavior_probs;  // T x n, distribution each action was drawn from
  Eigen::VectorXd values;          // T + 1, V(s_0) .. V(s_T)
  /// V of the state actually reached after step t. It differs from
  /// values[t + 1] only at episode ends, where values[t + 1] already belongs
  /// to the next episode. Left empty, it is taken to be values.tail(T).
  Eigen::VectorXd next_values;

  Eigen::Index size() const { return rewards.size(); }

  /// Throws DimensionMismatch / InvalidArgument when the arrays disagree.
  void validate() const {
    const Eigen::Index T = size();
    auto require = [](bool ok, const std::string& what) {
      if (!ok) throw Error(ErrorCode::DimensionMismatch, "rollout batch: " + what);
    };
    require(observations.rows() == T, "observation rows");
    require(actions.size() == T, "action count");
    require(terminated.size() == T && truncated.size() == T, "flag count");
    require(behavior_probs.rows() == T, "behavior probability rows");
    require(values.size() == T + 1, "values must have T + 1 entries");
    require(next_values.size() == 0 || next_values.size() == T, "next_values count");
    for (Eigen::Index t = 0; t < T; ++t) {
      if (actions[t] < 0 || actions[t] >= behavior_probs.cols()) {
        throw Error(ErrorCode::InvalidArgument, "rollout batch: action out of range");
      }
      if (std::abs(behavior_probs.row(t).sum() - 1.0) > 1e-6) {
        throw Error(ErrorCode::InvalidArgument,
                    "rollout batch: behavior probabilities do not sum to 1");
      }
    }
  }
};

/// Truncated GAE(lambda) by backward recursion:
///   delta_t = r_t + gamma * V'(t) * (1 - terminated_t) - V(s_t)
///   A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1},  A_T = 0
/// where V'(t) is the value of the successor state and done = terminated or
/// truncated. Truncated steps keep their bootstrap but stop the recursion.
template <typename Rewards, typename Values, typename NextValues>
Eigen::Matrix<typename Rewards::Scalar, Eigen::Dynamic, 1> compute_gae(
    const Eigen::DenseBase<Rewards>& rewards, const Eigen::DenseBase<Values>& values,
    const Eigen::DenseBase<NextValues>& next_values, const FlagVector& terminated,
    const FlagVector& truncated, typename Rewards::Scalar gamma,
    typename Rewards::Scalar lambda) {
  using Scalar = typename Rewards::Scalar;
  const Eigen::Index T = rewards.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> advantages(T);
  Scalar running = 0;
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const Scalar bootstrap = terminated[t] ? Scalar(0) : gamma * next_values[t];
    const Scalar delta = rewards[t] + bootstrap - values[t];
    const bool done = terminated[t] || truncated[t];
    running = delta + (done ? Scalar(0) : gamma * lambda * running);
    advantages[t] = running;
  }
  return advantages;
}

inline Eigen::VectorXd compute_gae(const RolloutBatch& batch, double gamma, double lambda) {
  const Eigen::Index T = batch.size();
  if (batch.next_values.size() == T) {
    return compute_gae(batch.rewards, batch.values.head(T), batch.next_values,
                       batch.terminated, batch.truncated, gamma, lambda);
  }
  return compute_gae(batch.rewards, batch.values.head(T), batch.values.tail(T),
                     batch.terminated, batch.truncated, gamma, lambda);
}

/// (x - mean) / std with the population standard deviation; zeros when the
/// standard deviation is below 1e-8.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> normalize(
    const Eigen::DenseBase<Derived>& raw) {
  using Scalar = typename Derived::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = raw.size();
  if (n == 0) return Vector();
  const Vector x = raw.derived();
  const Scalar mean = x.mean();
  const Vector centered = x.array() - mean;
  const Scalar stddev = std::sqrt(centered.squaredNorm() / static_cast<Scalar>(n));
  if (!(stddev >= Scalar(1e-8))) return Vector::Zero(n);
  return centered / stddev;
}

struct AdvantageSet {
  Eigen::VectorXd raw;
  Eigen::VectorXd normalized;
  /// raw + V(s_t): the regression targets for the critic.
  Eigen::VectorXd value_targets;
};

inline AdvantageSet make_advantages(const RolloutBatch& batch, double gamma, double lambda) {
  AdvantageSet out;
  out.raw = compute_gae(batch, gamma, lambda);
  out.normalized = normalize(out.raw);
  out.value_targets = out.raw + batch.values.head(batch.size());
  return out;
}

}  // namespace dtpo
