#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dtpo/env.hpp"
#include "dtpo/tree.hpp"

namespace dtpo {

struct EvalReport {
  std::vector<double> returns;  // undiscounted, one per rollout
  double mean = 0.0;
  double stderr_mean = 0.0;  // sample std (n - 1) / sqrt(n); 0 for one rollout
  int count = 0;
  std::uint64_t seed = 0;

  static EvalReport from_returns(std::vector<double> returns, std::uint64_t seed);

  /// "mean ± stderr"
  std::string summary() const;
  static std::string csv_header();
  std::string csv_row(const std::string& env_name) const;
};

/// Runs `rollouts` full episodes of the greedy action of a deterministic
/// policy. Rollout i draws from its own generator seeded with
/// derive_seed(seed, i), so results do not depend on `threads`.
/// Throws InvalidArgument for a stochastic policy and DimensionMismatch when
/// the policy's feature/action counts differ from the environment's.
EvalReport evaluate(const Environment& env, const PolicyTree& policy, int rollouts,
                    std::uint64_t seed, int threads = 1);

/// Undiscounted return of one episode under the greedy action.
double run_episode(Environment& env, const PolicyTree& policy, Rng& rng);

}  // namespace dtpo
