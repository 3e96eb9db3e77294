#include "dtpo/trainer.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include "dtpo/error.hpp"
#include "dtpo/evaluate.hpp"
#include "dtpo/objective.hpp"

namespace dtpo {

namespace {

constexpr double kLogFloor = 1e-8;

enum SeedStream : std::uint64_t { kCriticInit = 1, kRollouts = 2, kCriticShuffle = 3, kEval = 4 };

}  // namespace

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, std::string("invalid config: ") + what);
  };
  require(learning_rate > 0 && std::isfinite(learning_rate), "eta must be positive");
  require(gamma > 0 && gamma <= 1, "gamma must lie in (0, 1]");
  require(lambda >= 0 && lambda <= 1, "lambda must lie in [0, 1]");
  require(timesteps >= 1, "timesteps must be >= 1");
  require(iterations >= 0, "iterations must be >= 0");
  require(epochs >= 1, "epochs must be >= 1");
  require(minibatch >= 1, "minibatch must be >= 1");
  require(clip > 0, "clip must be positive");
  require(leaf_budget >= 1, "leaves must be >= 1");
  require(eval_every >= 1, "eval_every must be >= 1");
  require(eval_rollouts >= 1, "eval_rollouts must be >= 1");
  require(final_rollouts >= 1, "rollouts must be >= 1");
  require(critic_learning_rate > 0, "critic_lr must be positive");
}

void set_option(TrainConfig& c, const std::string& key, const std::string& value) {
  auto as_double = [&] {
    try {
      std::size_t used = 0;
      const double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "option '" + key + "' expects a number, got '" +
                                                  value + "'");
    }
  };
  auto as_int = [&] {
    const double v = as_double();
    if (v != std::floor(v)) {
      throw Error(ErrorCode::InvalidArgument, "option '" + key + "' expects an integer");
    }
    return static_cast<long long>(v);
  };

  if (key == "eta") c.learning_rate = as_double();
  else if (key == "gamma") c.gamma = as_double();
  else if (key == "lambda") c.lambda = as_double();
  else if (key == "timesteps") c.timesteps = static_cast<int>(as_int());
  else if (key == "iterations") c.iterations = static_cast<int>(as_int());
  else if (key == "epochs") c.epochs = static_cast<int>(as_int());
  else if (key == "minibatch") c.minibatch = static_cast<int>(as_int());
  else if (key == "clip") c.clip = as_double();
  else if (key == "leaves") c.leaf_budget = static_cast<int>(as_int());
  else if (key == "eval-every" || key == "eval_every") c.eval_every = static_cast<int>(as_int());
  else if (key == "eval-rollouts" || key == "eval_rollouts") c.eval_rollouts = static_cast<int>(as_int());
  else if (key == "rollouts") c.final_rollouts = static_cast<int>(as_int());
  else if (key == "critic-lr" || key == "critic_lr") c.critic_learning_rate = as_double();
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(as_int());
  else throw Error(ErrorCode::InvalidArgument, "unknown option '" + key + "'");
}

std::string metrics_csv_header() {
  return "iteration,env_steps,mean_batch_return,ldt_before,ldt_after,accepted,critic_loss,"
         "det_eval_return,best_return,leaves,seconds";
}

std::string metrics_csv_row(const IterationMetrics& m) {
  auto num = [](double v) { return std::isnan(v) ? std::string() : format_number(v); };
  return std::to_string(m.iteration) + "," + std::to_string(m.env_steps) + "," +
         num(m.mean_batch_return) + "," + num(m.ldt_before) + "," + num(m.ldt_after) + "," +
         (m.accepted ? "1" : "0") + "," + num(m.critic_loss) + "," + num(m.det_eval_return) +
         "," + num(m.best_return) + "," + std::to_string(m.leaves) + "," + num(m.seconds);
}

TrainState init_state(const Environment& env, const TrainConfig& config) {
  config.validate();
  const EnvSpec& spec = env.spec();
  TrainState s;
  s.policy = uniform_policy(spec.action_count, spec.feature_count);
  s.critic = Critic<double>(spec.feature_count, derive_seed(config.seed, kCriticInit));
  s.optimizer = Adam<double>(s.critic.parameters().size(), config.critic_learning_rate);
  s.rollout_rng.seed(derive_seed(config.seed, kRollouts));
  s.critic_rng.seed(derive_seed(config.seed, kCriticShuffle));
  s.eval_seed = derive_seed(config.seed, kEval);
  s.best_policy = determinize(merge_redundant(s.policy));
  s.best_return = evaluate(env, s.best_policy, config.eval_rollouts, s.eval_seed).mean;
  return s;
}

namespace {

int sample_action(const Eigen::VectorXd& probs, Rng& rng) {
  const double u = uniform(rng, 0.0, 1.0);
  double cumulative = 0.0;
  int last_positive = 0;
  for (Eigen::Index a = 0; a < probs.size(); ++a) {
    if (probs[a] <= 0.0) continue;
    cumulative += probs[a];
    last_positive = static_cast<int>(a);
    if (u < cumulative) return last_positive;
  }
  return last_positive;
}

}  // namespace

RolloutBatch collect_rollouts(Environment& env, const PolicyTree& policy,
                              const Critic<double>& critic, int timesteps, Rng& rng,
                              std::vector<double>* episode_returns) {
  if (policy.mode != PolicyMode::Stochastic) {
    throw Error(ErrorCode::InvalidArgument, "collect_rollouts() needs a stochastic policy");
  }
  const EnvSpec& spec = env.spec();
  const Eigen::Index T = timesteps;
  RolloutBatch b;
  b.observations.resize(T, spec.feature_count);
  b.actions.resize(T);
  b.rewards.resize(T);
  b.terminated = FlagVector::Constant(T, false);
  b.truncated = FlagVector::Constant(T, false);
  b.behavior_probs.resize(T, spec.action_count);

  std::vector<Eigen::Index> truncated_steps;
  std::vector<Observation> truncated_finals;

  Observation obs = env.reset(rng);
  double episode_return = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) {
    b.observations.row(t) = obs.transpose();
    const Eigen::VectorXd& probs = policy.probabilities(obs);
    b.behavior_probs.row(t) = probs.transpose();
    const int action = sample_action(probs, rng);
    b.actions[t] = action;

    StepResult step = env.step(action, rng);
    b.rewards[t] = step.reward;
    b.terminated[t] = step.terminated;
    b.truncated[t] = step.truncated;
    episode_return += step.reward;
    if (step.done()) {
      if (episode_returns) episode_returns->push_back(episode_return);
      episode_return = 0.0;
      if (step.truncated) {
        truncated_steps.push_back(t);
        truncated_finals.push_back(std::move(step.observation));
      }
      obs = env.reset(rng);
    } else {
      obs = std::move(step.observation);
    }
  }

  Eigen::MatrixXd all(T + 1, spec.feature_count);
  all.topRows(T) = b.observations;
  all.row(T) = obs.transpose();
  b.values = critic.values(all);

  b.next_values = b.values.tail(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    if (b.terminated[t]) b.next_values[t] = 0.0;
  }
  if (!truncated_steps.empty()) {
    Eigen::MatrixXd finals(static_cast<Eigen::Index>(truncated_finals.size()), spec.feature_count);
    for (std::size_t i = 0; i < truncated_finals.size(); ++i) {
      finals.row(static_cast<Eigen::Index>(i)) = truncated_finals[i].transpose();
    }
    const Eigen::VectorXd final_values = critic.values(finals);
    for (std::size_t i = 0; i < truncated_steps.size(); ++i) {
      b.next_values[truncated_steps[i]] = final_values[static_cast<Eigen::Index>(i)];
    }
  }
  return b;
}

Eigen::MatrixXd policy_targets(const RolloutBatch& batch, const Eigen::VectorXd& advantages,
                               double eta) {
  const Eigen::MatrixXd logits = (batch.behavior_probs.array() + kLogFloor).log().matrix();
  const Eigen::MatrixXd grad =
      ldt_gradient(logits, batch.actions, batch.behavior_probs, advantages);
  return softmax_rows(logits + eta * grad);
}

void dtpo_iteration(TrainState& state, Environment& env, const TrainConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  IterationMetrics m;
  m.iteration = ++state.iteration;

  std::vector<double> returns;
  const RolloutBatch batch = collect_rollouts(env, state.policy, state.critic, config.timesteps,
                                              state.rollout_rng, &returns);
  state.env_steps += batch.size();
  m.env_steps = state.env_steps;
  m.mean_batch_return =
      returns.empty() ? batch.rewards.sum()
                      : Eigen::Map<const Eigen::VectorXd>(returns.data(),
                                                          static_cast<Eigen::Index>(returns.size()))
                            .mean();

  const AdvantageSet adv = make_advantages(batch, config.gamma, config.lambda);
  const Eigen::MatrixXd targets = policy_targets(batch, adv.normalized, config.learning_rate);

  PolicyTree candidate{fit_regression_tree(batch.observations, targets, config.leaf_budget),
                       PolicyMode::Stochastic};
  m.ldt_before = ldt_objective_from_probabilities(state.policy.tree.predict_rows(batch.observations),
                                                  batch.actions, batch.behavior_probs,
                                                  adv.normalized);
  const double candidate_ldt = ldt_objective_from_probabilities(
      candidate.tree.predict_rows(batch.observations), batch.actions, batch.behavior_probs,
      adv.normalized);
  m.accepted = candidate_ldt > m.ldt_before;
  if (m.accepted) state.policy = std::move(candidate);
  m.ldt_after = m.accepted ? candidate_ldt : m.ldt_before;
  m.leaves = state.policy.tree.leaf_count();

  if (m.iteration % config.eval_every == 0 || m.iteration == config.iterations) {
    PolicyTree deterministic = determinize(merge_redundant(state.policy));
    m.det_eval_return =
        evaluate(env, deterministic, config.eval_rollouts, state.eval_seed).mean;
    // Ties go to the newer policy, which has seen more training data.
    if (m.det_eval_return >= state.best_return) {
      state.best_return = m.det_eval_return;
      state.best_policy = std::move(deterministic);
    }
  }
  m.best_return = state.best_return;

  m.critic_loss = train_epochs(state.critic, state.optimizer, batch.observations,
                               adv.value_targets, config.epochs, config.minibatch, config.clip,
                               state.critic_rng);

  state.elapsed_seconds +=
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  m.seconds = config.record_time ? state.elapsed_seconds : 0.0;
  state.history.push_back(m);
}

TrainResult train(Environment& env, const TrainConfig& config,
                  const IterationCallback& on_iteration) {
  TrainState state = init_state(env, config);
  for (int i = 0; i < config.iterations; ++i) {
    dtpo_iteration(state, env, config);
    if (on_iteration) on_iteration(state.history.back());
  }
  return {state.best_policy, state.best_return, state.policy, std::move(state.history)};
}

}  // namespace dtpo
