#include "dtpo/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

#include "dtpo/error.hpp"

namespace dtpo {

EvalReport EvalReport::from_returns(std::vector<double> returns, std::uint64_t seed) {
  EvalReport r;
  r.count = static_cast<int>(returns.size());
  r.seed = seed;
  if (r.count > 0) {
    r.mean = std::accumulate(returns.begin(), returns.end(), 0.0) / r.count;
  }
  if (r.count > 1) {
    double ss = 0.0;
    for (double v : returns) ss += (v - r.mean) * (v - r.mean);
    r.stderr_mean = std::sqrt(ss / (r.count - 1)) / std::sqrt(static_cast<double>(r.count));
  }
  r.returns = std::move(returns);
  return r;
}

std::string EvalReport::summary() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f", mean, stderr_mean);
  return buf;
}

std::string EvalReport::csv_header() { return "env,rollouts,seed,mean,stderr"; }

std::string EvalReport::csv_row(const std::string& env_name) const {
  return env_name + "," + std::to_string(count) + "," + std::to_string(seed) + "," +
         format_number(mean) + "," + format_number(stderr_mean);
}

double run_episode(Environment& env, const PolicyTree& policy, Rng& rng) {
  Observation obs = env.reset(rng);
  double total = 0.0;
  while (true) {
    StepResult s = env.step(policy.greedy_action(obs), rng);
    total += s.reward;
    if (s.done()) return total;
    obs = std::move(s.observation);
  }
}

EvalReport evaluate(const Environment& env, const PolicyTree& policy, int rollouts,
                    std::uint64_t seed, int threads) {
  if (policy.mode != PolicyMode::Deterministic) {
    throw Error(ErrorCode::InvalidArgument, "evaluate() needs a deterministic policy");
  }
  const EnvSpec& spec = env.spec();
  if (policy.tree.feature_count() != spec.feature_count ||
      policy.tree.output_size() != spec.action_count) {
    throw Error(ErrorCode::DimensionMismatch,
                "policy has " + std::to_string(policy.tree.feature_count()) + " features / " +
                    std::to_string(policy.tree.output_size()) + " actions but " + spec.name +
                    " has " + std::to_string(spec.feature_count) + " / " +
                    std::to_string(spec.action_count));
  }
  if (rollouts < 1) throw Error(ErrorCode::InvalidArgument, "need at least one rollout");

  std::vector<double> returns(static_cast<std::size_t>(rollouts));
  auto work = [&](int begin, int end) {
    auto local = env.clone();
    for (int i = begin; i < end; ++i) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
      returns[static_cast<std::size_t>(i)] = run_episode(*local, policy, rng);
    }
  };

  threads = std::clamp(threads, 1, rollouts);
  if (threads == 1) {
    work(0, rollouts);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (rollouts + threads - 1) / threads;
    for (int begin = 0; begin < rollouts; begin += chunk) {
      pool.emplace_back(work, begin, std::min(rollouts, begin + chunk));
    }
    for (auto& t : pool) t.join();
  }
  return EvalReport::from_returns(std::move(returns), seed);
}

}  // namespace dtpo
