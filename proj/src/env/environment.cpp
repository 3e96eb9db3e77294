#include <algorithm>
#include <cctype>
#include <map>
#include <string>

#include "dtpo/env.hpp"
#include "dtpo/error.hpp"

namespace dtpo {

Observation Environment::reset(Rng& rng) {
  steps_ = 0;
  done_ = false;
  return reset_state(rng);
}

StepResult Environment::step(int action, Rng& rng) {
  const EnvSpec& s = spec();
  if (action < 0 || action >= s.action_count) {
    throw Error(ErrorCode::InvalidAction,
                s.name + ": action " + std::to_string(action) +
                    " outside [0, " + std::to_string(s.action_count) + ")");
  }
  if (done_) {
    throw Error(ErrorCode::SteppedFinishedEpisode,
                s.name + ": step() called on a finished episode; call reset()");
  }
  Transition t = advance(action, rng);
  ++steps_;
  StepResult result{std::move(t.observation), t.reward, t.terminated, false};
  if (!result.terminated && steps_ >= s.max_episode_steps) {
    result.truncated = true;
  }
  done_ = result.done();
  return result;
}

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

std::vector<std::string> environment_names() {
  return {"cartpole",      "cartpole-swingup", "pendulum", "frozenlake4x4",
          "frozenlake8x8", "blackjack",        "xor"};
}

std::unique_ptr<Environment> make_environment(std::string_view name) {
  static const std::map<std::string, std::string> aliases = {
      {"cartpole-v1", "cartpole"},
      {"cartpoleswingup", "cartpole-swingup"},
      {"swingup", "cartpole-swingup"},
      {"pendulum-v1", "pendulum"},
      {"pendulum-discrete", "pendulum"},
      {"frozenlake", "frozenlake4x4"},
  };
  std::string key = lowercase(name);
  if (auto it = aliases.find(key); it != aliases.end()) key = it->second;

  if (key == "cartpole") return std::make_unique<CartPole>();
  if (key == "cartpole-swingup") return std::make_unique<CartPoleSwingup>();
  if (key == "pendulum") return std::make_unique<DiscretePendulum>();
  if (key == "frozenlake4x4") {
    return std::make_unique<FrozenLake>(FrozenLake::four_by_four());
  }
  if (key == "frozenlake8x8") {
    return std::make_unique<FrozenLake>(FrozenLake::eight_by_eight());
  }
  if (key == "blackjack") return std::make_unique<Blackjack>();
  if (key == "xor") return std::make_unique<Xor>();

  std::string known;
  for (const auto& n : environment_names()) known += (known.empty() ? "" : ", ") + n;
  throw Error(ErrorCode::UnknownEnvironment,
              "unknown environment '" + std::string(name) + "' (known: " + known + ")");
}

}  // namespace dtpo
