#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "dtpo/advantage.hpp"
#include "dtpo/critic.hpp"
#include "dtpo/env.hpp"
#include "dtpo/tree.hpp"

namespace dtpo {

struct TrainConfig {
  double learning_rate = 1.0;   // eta, step on the logits
  double gamma = 0.99;
  double lambda = 0.95;
  int timesteps = 10'000;       // T per iteration
  int iterations = 1'500;       // N
  int epochs = 4;               // critic epochs per iteration
  int minibatch = 64;           // critic minibatch size
  double clip = 0.2;            // value-loss clip
  int leaf_budget = 16;
  int eval_every = 10;
  int eval_rollouts = 100;      // in-training deterministic evaluation
  int final_rollouts = 1'000;   // reporting evaluation
  double critic_learning_rate = 2.5e-4;
  std::uint64_t seed = 0;
  /// When false the metrics "seconds" column is written as 0 so that runs
  /// with equal seeds produce byte-identical CSVs.
  bool record_time = true;

  /// Throws InvalidArgument naming the first offending field.
  void validate() const;
};

/// Sets one field from its command-line spelling ("iterations", "eta",
/// "leaves", ...). Throws InvalidArgument for unknown keys or bad values.
void set_option(TrainConfig& config, const std::string& key, const std::string& value);

struct IterationMetrics {
  int iteration = 0;
  long env_steps = 0;
  double mean_batch_return = 0.0;
  double ldt_before = 0.0;
  double ldt_after = 0.0;
  bool accepted = false;
  double critic_loss = 0.0;
  double det_eval_return = std::numeric_limits<double>::quiet_NaN();  // NaN when not evaluated
  double best_return = 0.0;
  int leaves = 0;
  double seconds = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const IterationMetrics& m);

struct TrainState {
  PolicyTree policy;  // stochastic incumbent
  Critic<double> critic;
  Adam<double> optimizer;
  PolicyTree best_policy;  // deterministic, merged
  double best_return = -std::numeric_limits<double>::infinity();
  int iteration = 0;
  long env_steps = 0;
  std::vector<IterationMetrics> history;
  Rng rollout_rng;
  Rng critic_rng;
  std::uint64_t eval_seed = 0;
  double elapsed_seconds = 0.0;
};

/// Uniform single-leaf policy, freshly initialised critic, and the initial
/// policy's deterministic copy evaluated as the first best.
TrainState init_state(const Environment& env, const TrainConfig& config);

/// Runs the stochastic policy for T steps, resetting the environment at the
/// start and after every finished episode. Values cover s_0 .. s_T, and
/// next_values hold V of the final observation at truncated steps.
/// Returns of episodes completed inside the batch go to `episode_returns`.
RolloutBatch collect_rollouts(Environment& env, const PolicyTree& policy,
                              const Critic<double>& critic, int timesteps, Rng& rng,
                              std::vector<double>* episode_returns = nullptr);

/// Soft targets softmax(l + eta * grad L^DT(l)) with l = log(pi_old + 1e-8).
Eigen::MatrixXd policy_targets(const RolloutBatch& batch, const Eigen::VectorXd& advantages,
                               double eta);

/// One training iteration: collect, estimate advantages, refit the policy
/// tree and keep it only if it raises L^DT on this batch, periodically
/// evaluate the deterministic copy, then fit the critic.
void dtpo_iteration(TrainState& state, Environment& env, const TrainConfig& config);

struct TrainResult {
  PolicyTree best_policy;  // deterministic, merged
  double best_return = 0.0;
  PolicyTree final_policy;  // last stochastic incumbent
  std::vector<IterationMetrics> history;
};

using IterationCallback = std::function<void(const IterationMetrics&)>;

TrainResult train(Environment& env, const TrainConfig& config,
                  const IterationCallback& on_iteration = {});

}  // namespace dtpo
