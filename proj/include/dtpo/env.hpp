#pragma once

#include <Eigen/Core>

#include <array>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "dtpo/rng.hpp"

namespace dtpo {

using Observation = Eigen::VectorXd;

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;

  bool done() const { return terminated || truncated; }
};

struct EnvSpec {
  std::string name;
  int feature_count = 0;
  int action_count = 0;
  int max_episode_steps = 0;
  std::vector<std::string> feature_names;
  std::vector<std::string> action_names;
};

/// Episodic environment with a discrete action space.
///
/// All randomness is drawn from the generator passed to reset() and step(),
/// so an identical generator state and action sequence reproduce an episode
/// exactly. The base class owns the step counter and the episode-finished
/// state; subclasses only implement the transition.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;

  Observation reset(Rng& rng);

  /// Throws InvalidAction for an out-of-range action and
  /// SteppedFinishedEpisode when the episode has ended (or never started).
  StepResult step(int action, Rng& rng);

  bool episode_done() const { return done_; }
  int elapsed_steps() const { return steps_; }

 protected:
  struct Transition {
    Observation observation;
    double reward = 0.0;
    bool terminated = false;
  };

  virtual Observation reset_state(Rng& rng) = 0;
  virtual Transition advance(int action, Rng& rng) = 0;

 private:
  int steps_ = 0;
  bool done_ = true;
};

/// Classic cart-pole balancing with Euler integration; +1 reward per step.
class CartPole final : public Environment {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kCartMass = 1.0;
  static constexpr double kPoleMass = 0.1;
  static constexpr double kHalfLength = 0.5;
  static constexpr double kForce = 10.0;
  static constexpr double kTau = 0.02;
  static constexpr double kXThreshold = 2.4;
  static const double kThetaThreshold;  // 12 degrees

  CartPole();
  const EnvSpec& spec() const override { return spec_; }
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<CartPole>(*this);
  }

  /// Overwrites the physical state (x, x_dot, theta, theta_dot); the
  /// episode must already be running.
  void set_state(const std::array<double, 4>& state) { state_ = state; }
  const std::array<double, 4>& state() const { return state_; }

 protected:
  Observation reset_state(Rng& rng) override;
  Transition advance(int action, Rng& rng) override;

 private:
  EnvSpec spec_;
  std::array<double, 4> state_{};
};

/// Cart-pole with the pole hanging down at reset. Reward per step is
/// (1 + cos theta) / 2 times cos(pi/2 * x / x_limit), so it peaks at 1 when
/// the pole is upright over the track center.
class CartPoleSwingup final : public Environment {
 public:
  static constexpr double kGravity = 9.82;
  static constexpr double kCartMass = 0.5;
  static constexpr double kPoleMass = 0.5;
  static constexpr double kPoleLength = 0.6;
  static constexpr double kFriction = 0.1;
  static constexpr double kForce = 10.0;
  static constexpr double kDt = 0.01;
  static constexpr double kXThreshold = 2.4;

  CartPoleSwingup();
  const EnvSpec& spec() const override { return spec_; }
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<CartPoleSwingup>(*this);
  }

 protected:
  Observation reset_state(Rng& rng) override;
  Transition advance(int action, Rng& rng) override;

 private:
  Observation observe() const;

  EnvSpec spec_;
  double x_ = 0, x_dot_ = 0, theta_ = 0, theta_dot_ = 0;
};

/// Pendulum swing-up with two bang-bang actions (max torque left/right).
class DiscretePendulum final : public Environment {
 public:
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kMaxTorque = 2.0;
  static constexpr double kDt = 0.05;
  static constexpr double kGravity = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;

  DiscretePendulum();
  const EnvSpec& spec() const override { return spec_; }
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<DiscretePendulum>(*this);
  }

 protected:
  Observation reset_state(Rng& rng) override;
  Transition advance(int action, Rng& rng) override;

 private:
  Observation observe() const;

  EnvSpec spec_;
  double theta_ = 0, theta_dot_ = 0;
};

/// Slippery grid world. Actions are 0=left, 1=down, 2=right, 3=up; the
/// executed move is the intended one or either perpendicular one, each with
/// probability 1/3. Observation is (row, column).
class FrozenLake final : public Environment {
 public:
  enum Action { kLeft = 0, kDown = 1, kRight = 2, kUp = 3 };

  /// Rows of 'S' (start), 'F' (frozen), 'H' (hole) and 'G' (goal).
  FrozenLake(std::string name, std::vector<std::string> map,
             int max_episode_steps);

  static FrozenLake four_by_four();
  static FrozenLake eight_by_eight();

  const EnvSpec& spec() const override { return spec_; }
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<FrozenLake>(*this);
  }

  const std::vector<std::string>& map() const { return map_; }
  int rows() const { return static_cast<int>(map_.size()); }
  int cols() const { return static_cast<int>(map_.front().size()); }
  char tile(int row, int col) const { return map_[row][col]; }

  /// Cell reached from (row, col) when moving in `direction`; walls block.
  std::pair<int, int> move(int row, int col, int direction) const;

 protected:
  Observation reset_state(Rng& rng) override;
  Transition advance(int action, Rng& rng) override;

 private:
  EnvSpec spec_;
  std::vector<std::string> map_;
  int start_row_ = 0, start_col_ = 0;
  int row_ = 0, col_ = 0;
};

/// Repeated blackjack against a dealer who stands on 17, infinite deck.
/// One episode is kHandsPerEpisode consecutive hands with unit stakes.
/// Actions: 0=stick, 1=hit. Observation: (player sum, dealer card, usable ace).
class Blackjack final : public Environment {
 public:
  static constexpr int kHandsPerEpisode = 100;

  Blackjack();
  const EnvSpec& spec() const override { return spec_; }
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<Blackjack>(*this);
  }

  int hands_played() const { return hands_played_; }

  static int hand_value(const std::vector<int>& cards);
  static bool usable_ace(const std::vector<int>& cards);

 protected:
  Observation reset_state(Rng& rng) override;
  Transition advance(int action, Rng& rng) override;

 private:
  void deal(Rng& rng);
  Observation observe() const;

  EnvSpec spec_;
  std::vector<int> player_, dealer_;
  int hands_played_ = 0;
};

/// Agent is placed on a uniformly drawn cell center of a kGrid x kGrid
/// lattice in the unit square and earns +1 when its action equals
/// [x > 0.5] XOR [y > 0.5]. The position is redrawn every step.
class Xor final : public Environment {
 public:
  static constexpr int kGrid = 20;

  Xor();
  const EnvSpec& spec() const override { return spec_; }
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<Xor>(*this);
  }

  static int correct_action(double x, double y) {
    return static_cast<int>((x > 0.5) != (y > 0.5));
  }

  void set_position(double x, double y) { x_ = x; y_ = y; }

 protected:
  Observation reset_state(Rng& rng) override;
  Transition advance(int action, Rng& rng) override;

 private:
  void sample(Rng& rng);

  EnvSpec spec_;
  double x_ = 0, y_ = 0;
};

/// Canonical names accepted by make_environment().
std::vector<std::string> environment_names();

/// Case-insensitive lookup; also accepts the common gym-style aliases
/// ("CartPole-v1", "Pendulum-v1", ...). Throws UnknownEnvironment.
std::unique_ptr<Environment> make_environment(std::string_view name);

}  // namespace dtpo
