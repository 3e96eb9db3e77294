#include <algorithm>
#include <cmath>
#include <numbers>

#include "dtpo/env.hpp"

namespace dtpo {

namespace {

double angle_normalize(double x) {
  constexpr double pi = std::numbers::pi;
  return std::fmod(std::fmod(x + pi, 2 * pi) + 2 * pi, 2 * pi) - pi;
}

}  // namespace

const double CartPole::kThetaThreshold = 12.0 * 2.0 * std::numbers::pi / 360.0;

CartPole::CartPole()
    : spec_{"cartpole",
            4,
            2,
            500,
            {"cart position", "cart velocity", "pole angle", "pole angular velocity"},
            {"left", "right"}} {}

Observation CartPole::reset_state(Rng& rng) {
  for (double& v : state_) v = uniform(rng, -0.05, 0.05);
  return Eigen::Map<const Eigen::Vector4d>(state_.data());
}

Environment::Transition CartPole::advance(int action, Rng& /*rng*/) {
  constexpr double total_mass = kCartMass + kPoleMass;
  constexpr double polemass_length = kPoleMass * kHalfLength;

  auto [x, x_dot, theta, theta_dot] = state_;
  const double force = action == 1 ? kForce : -kForce;
  const double cos_theta = std::cos(theta);
  const double sin_theta = std::sin(theta);

  const double temp =
      (force + polemass_length * theta_dot * theta_dot * sin_theta) / total_mass;
  const double theta_acc =
      (kGravity * sin_theta - cos_theta * temp) /
      (kHalfLength * (4.0 / 3.0 - kPoleMass * cos_theta * cos_theta / total_mass));
  const double x_acc = temp - polemass_length * theta_acc * cos_theta / total_mass;

  x += kTau * x_dot;
  x_dot += kTau * x_acc;
  theta += kTau * theta_dot;
  theta_dot += kTau * theta_acc;
  state_ = {x, x_dot, theta, theta_dot};

  const bool terminated = x < -kXThreshold || x > kXThreshold ||
                          theta < -kThetaThreshold || theta > kThetaThreshold;
  return {Eigen::Map<const Eigen::Vector4d>(state_.data()), 1.0, terminated};
}

CartPoleSwingup::CartPoleSwingup()
    : spec_{"cartpole-swingup",
            5,
            2,
            1000,
            {"cart position", "cart velocity", "pole angle cos", "pole angle sin",
             "pole angular velocity"},
            {"left", "right"}} {}

Observation CartPoleSwingup::observe() const {
  Observation obs(5);
  obs << x_, x_dot_, std::cos(theta_), std::sin(theta_), theta_dot_;
  return obs;
}

Observation CartPoleSwingup::reset_state(Rng& rng) {
  x_ = normal(rng, 0.0, 0.2);
  x_dot_ = normal(rng, 0.0, 0.2);
  theta_ = normal(rng, std::numbers::pi, 0.2);
  theta_dot_ = normal(rng, 0.0, 0.2);
  return observe();
}

Environment::Transition CartPoleSwingup::advance(int action, Rng& /*rng*/) {
  constexpr double total_mass = kCartMass + kPoleMass;
  constexpr double pole_ml = kPoleMass * kPoleLength;

  const double force = action == 1 ? kForce : -kForce;
  const double s = std::sin(theta_);
  const double c = std::cos(theta_);

  const double x_acc = (-2 * pole_ml * theta_dot_ * theta_dot_ * s +
                        3 * kPoleMass * kGravity * s * c + 4 * force -
                        4 * kFriction * x_dot_) /
                       (4 * total_mass - 3 * kPoleMass * c * c);
  const double theta_acc =
      (-3 * pole_ml * theta_dot_ * theta_dot_ * s * c +
       6 * total_mass * kGravity * s + 6 * (force - kFriction * x_dot_) * c) /
      (4 * kPoleLength * total_mass - 3 * pole_ml * c * c);

  x_ += x_dot_ * kDt;
  theta_ += theta_dot_ * kDt;
  x_dot_ += x_acc * kDt;
  theta_dot_ += theta_acc * kDt;

  const bool terminated = x_ < -kXThreshold || x_ > kXThreshold;
  const double reward_theta = (std::cos(theta_) + 1.0) / 2.0;
  const double reward_x = std::cos(x_ / kXThreshold * std::numbers::pi / 2.0);
  return {observe(), reward_theta * reward_x, terminated};
}

DiscretePendulum::DiscretePendulum()
    : spec_{"pendulum",
            3,
            2,
            200,
            {"angle cos", "angle sin", "angular velocity"},
            {"torque left", "torque right"}} {}

Observation DiscretePendulum::observe() const {
  return Eigen::Vector3d(std::cos(theta_), std::sin(theta_), theta_dot_);
}

Observation DiscretePendulum::reset_state(Rng& rng) {
  theta_ = uniform(rng, -std::numbers::pi, std::numbers::pi);
  theta_dot_ = uniform(rng, -1.0, 1.0);
  return observe();
}

Environment::Transition DiscretePendulum::advance(int action, Rng& /*rng*/) {
  const double u = action == 1 ? kMaxTorque : -kMaxTorque;
  const double norm_theta = angle_normalize(theta_);
  const double cost = norm_theta * norm_theta + 0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u;

  double new_theta_dot =
      theta_dot_ + (3 * kGravity / (2 * kLength) * std::sin(theta_) +
                    3.0 / (kMass * kLength * kLength) * u) * kDt;
  new_theta_dot = std::clamp(new_theta_dot, -kMaxSpeed, kMaxSpeed);
  theta_ += new_theta_dot * kDt;
  theta_dot_ = new_theta_dot;
  return {observe(), -cost, false};
}

}  // namespace dtpo
