#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "dtpo/error.hpp"
#include "dtpo/rng.hpp"

namespace dtpo {

/// Value network m -> 64 -> 64 -> 1 with tanh hidden units and a linear
/// output. All parameters live in one flat vector, laid out as
/// W1 (64 x m, column-major), b1, W2 (64 x 64), b2, W3 (1 x 64), b3.
template <typename Scalar>
class Critic {
 public:
  static constexpr Eigen::Index kHidden = 64;

  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowMajorMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Critic() = default;

  /// Uniform fan-in initialisation, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Critic(Eigen::Index input_size, std::uint64_t seed) : input_size_(input_size) {
    params_.resize(parameter_count(input_size));
    Rng rng(seed);
    auto fill = [&](Eigen::Index offset, Eigen::Index count, Eigen::Index fan_in) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (Eigen::Index i = 0; i < count; ++i) {
        params_[offset + i] = static_cast<Scalar>(uniform(rng, -bound, bound));
      }
    };
    fill(w1_offset(), kHidden * input_size, input_size);
    fill(b1_offset(), kHidden, input_size);
    fill(w2_offset(), kHidden * kHidden, kHidden);
    fill(b2_offset(), kHidden, kHidden);
    fill(w3_offset(), kHidden, kHidden);
    fill(b3_offset(), 1, kHidden);
  }

  Critic(Eigen::Index input_size, Vector parameters)
      : input_size_(input_size), params_(std::move(parameters)) {
    if (params_.size() != parameter_count(input_size)) {
      throw Error(ErrorCode::DimensionMismatch, "critic parameter vector has wrong length");
    }
  }

  static Eigen::Index parameter_count(Eigen::Index input_size) {
    return kHidden * input_size + kHidden + kHidden * kHidden + kHidden + kHidden + 1;
  }

  Eigen::Index input_size() const { return input_size_; }
  const Vector& parameters() const { return params_; }
  Vector& parameters() { return params_; }

  auto w1() const { return Eigen::Map<const Matrix>(params_.data() + w1_offset(), kHidden, input_size_); }
  auto b1() const { return Eigen::Map<const Vector>(params_.data() + b1_offset(), kHidden); }
  auto w2() const { return Eigen::Map<const Matrix>(params_.data() + w2_offset(), kHidden, kHidden); }
  auto b2() const { return Eigen::Map<const Vector>(params_.data() + b2_offset(), kHidden); }
  auto w3() const { return Eigen::Map<const Vector>(params_.data() + w3_offset(), kHidden); }
  Scalar b3() const { return params_[b3_offset()]; }

  Scalar value(const Eigen::Ref<const Vector>& x) const {
    check_input(x.size());
    const Vector h1 = (w1() * x + b1()).array().tanh();
    const Vector h2 = (w2() * h1 + b2()).array().tanh();
    return w3().dot(h2) + b3();
  }

  /// Values for every row of an n x m sample matrix.
  template <typename Derived>
  Vector values(const Eigen::MatrixBase<Derived>& samples) const {
    check_input(samples.cols());
    Matrix h1 = ((samples * w1().transpose()).rowwise() + b1().transpose()).array().tanh();
    Matrix h2 = ((h1 * w2().transpose()).rowwise() + b2().transpose()).array().tanh();
    return (h2 * w3()).array() + b3();
  }

  /// Mean clipped value loss over the rows of `samples` and, if `gradient`
  /// is non-null, its gradient with respect to parameters(). `old_values`
  /// are the frozen predictions the update is clipped around.
  template <typename Derived>
  Scalar loss_and_gradient(const Eigen::MatrixBase<Derived>& samples,
                           const Eigen::Ref<const Vector>& old_values,
                           const Eigen::Ref<const Vector>& targets, Scalar clip,
                           Vector* gradient) const;

 private:
  void check_input(Eigen::Index size) const {
    if (size != input_size_) {
      throw Error(ErrorCode::DimensionMismatch,
                  "critic expects " + std::to_string(input_size_) + " features, got " +
                      std::to_string(size));
    }
  }

  Eigen::Index w1_offset() const { return 0; }
  Eigen::Index b1_offset() const { return kHidden * input_size_; }
  Eigen::Index w2_offset() const { return b1_offset() + kHidden; }
  Eigen::Index b2_offset() const { return w2_offset() + kHidden * kHidden; }
  Eigen::Index w3_offset() const { return b2_offset() + kHidden; }
  Eigen::Index b3_offset() const { return w3_offset() + kHidden; }

  Eigen::Index input_size_ = 0;
  Vector params_;
};

/// max((v - t)^2, (v_old + clip(v - v_old, -eps, eps) - t)^2)
template <typename Scalar>
Scalar clipped_value_loss(Scalar value, Scalar old_value, Scalar target, Scalar clip) {
  const Scalar unclipped = (value - target) * (value - target);
  const Scalar clipped_value = old_value + std::clamp(value - old_value, -clip, clip);
  const Scalar clipped = (clipped_value - target) * (clipped_value - target);
  return std::max(unclipped, clipped);
}

/// d/dvalue of clipped_value_loss. At a tie between the two branches the
/// unclipped branch's derivative is used.
template <typename Scalar>
Scalar clipped_value_loss_derivative(Scalar value, Scalar old_value, Scalar target,
                                     Scalar clip) {
  const Scalar unclipped = (value - target) * (value - target);
  const Scalar diff = value - old_value;
  const Scalar clipped_value = old_value + std::clamp(diff, -clip, clip);
  const Scalar clipped = (clipped_value - target) * (clipped_value - target);
  if (unclipped >= clipped) return 2 * (value - target);
  // The clipped branch is flat in `value` once the clip is active.
  return std::abs(diff) < clip ? 2 * (clipped_value - target) : Scalar(0);
}

template <typename Scalar>
template <typename Derived>
Scalar Critic<Scalar>::loss_and_gradient(const Eigen::MatrixBase<Derived>& samples,
                                         const Eigen::Ref<const Vector>& old_values,
                                         const Eigen::Ref<const Vector>& targets, Scalar clip,
                                         Vector* gradient) const {
  check_input(samples.cols());
  const Eigen::Index n = samples.rows();
  const Matrix x = samples;
  const Matrix h1 = ((x * w1().transpose()).rowwise() + b1().transpose()).array().tanh();
  const Matrix h2 = ((h1 * w2().transpose()).rowwise() + b2().transpose()).array().tanh();
  const Vector out = (h2 * w3()).array() + b3();

  Scalar loss = 0;
  Vector d_out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    loss += clipped_value_loss(out[i], old_values[i], targets[i], clip);
    d_out[i] = clipped_value_loss_derivative(out[i], old_values[i], targets[i], clip) /
               static_cast<Scalar>(n);
  }
  loss /= static_cast<Scalar>(n);
  if (gradient == nullptr) return loss;

  gradient->resize(params_.size());
  Vector& g = *gradient;
  Eigen::Map<Matrix> g_w1(g.data() + w1_offset(), kHidden, input_size_);
  Eigen::Map<Vector> g_b1(g.data() + b1_offset(), kHidden);
  Eigen::Map<Matrix> g_w2(g.data() + w2_offset(), kHidden, kHidden);
  Eigen::Map<Vector> g_b2(g.data() + b2_offset(), kHidden);
  Eigen::Map<Vector> g_w3(g.data() + w3_offset(), kHidden);

  g_w3.noalias() = h2.transpose() * d_out;
  g[b3_offset()] = d_out.sum();
  const Matrix d_z2 = ((d_out * w3().transpose()).array() * (1 - h2.array().square())).matrix();
  g_w2.noalias() = d_z2.transpose() * h1;
  g_b2 = d_z2.colwise().sum().transpose();
  const Matrix d_z1 = ((d_z2 * w2()).array() * (1 - h1.array().square())).matrix();
  g_w1.noalias() = d_z1.transpose() * x;
  g_b1 = d_z1.colwise().sum().transpose();
  return loss;
}

/// Adam with bias-corrected moment estimates.
template <typename Scalar>
struct Adam {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Scalar learning_rate = Scalar(2.5e-4);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);
  Vector first_moment;
  Vector second_moment;
  long step_count = 0;

  Adam() = default;
  explicit Adam(Eigen::Index size, Scalar lr = Scalar(2.5e-4))
      : learning_rate(lr),
        first_moment(Vector::Zero(size)),
        second_moment(Vector::Zero(size)) {}

  void step(Vector& params, const Vector& gradient) {
    if (first_moment.size() != params.size()) {
      first_moment = Vector::Zero(params.size());
      second_moment = Vector::Zero(params.size());
    }
    ++step_count;
    first_moment = beta1 * first_moment + (1 - beta1) * gradient;
    second_moment = beta2 * second_moment + (1 - beta2) * gradient.cwiseAbs2();
    const Scalar c1 = 1 - std::pow(beta1, static_cast<Scalar>(step_count));
    const Scalar c2 = 1 - std::pow(beta2, static_cast<Scalar>(step_count));
    params.array() -= learning_rate * (first_moment.array() / c1) /
                      ((second_moment.array() / c2).sqrt() + epsilon);
  }
};

/// E epochs of shuffled minibatches (the last one may be short); one Adam
/// step per minibatch on the mean clipped value loss, clipped around the
/// predictions the network made before the first step. Returns the mean
/// minibatch loss of the final epoch.
template <typename Scalar>
Scalar train_epochs(Critic<Scalar>& critic, Adam<Scalar>& optimizer,
                    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& samples,
                    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& targets, int epochs,
                    int minibatch, Scalar clip, Rng& rng) {
  using Vector = typename Critic<Scalar>::Vector;
  using Matrix = typename Critic<Scalar>::Matrix;
  if (epochs < 1 || minibatch < 1) {
    throw Error(ErrorCode::InvalidArgument, "epochs and minibatch size must be >= 1");
  }
  if (samples.rows() != targets.size()) {
    throw Error(ErrorCode::DimensionMismatch, "critic samples and targets differ in length");
  }
  const Eigen::Index n = samples.rows();
  if (n == 0) return Scalar(0);

  const Vector old_values = critic.values(samples);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));

  Matrix x_batch;
  Vector old_batch, target_batch, gradient;
  Scalar epoch_loss = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    epoch_loss = 0;
    int batches = 0;
    for (Eigen::Index start = 0; start < n; start += minibatch) {
      const Eigen::Index size = std::min<Eigen::Index>(minibatch, n - start);
      x_batch.resize(size, samples.cols());
      old_batch.resize(size);
      target_batch.resize(size);
      for (Eigen::Index i = 0; i < size; ++i) {
        const Eigen::Index r = order[static_cast<std::size_t>(start + i)];
        x_batch.row(i) = samples.row(r);
        old_batch[i] = old_values[r];
        target_batch[i] = targets[r];
      }
      epoch_loss += critic.loss_and_gradient(x_batch, old_batch, target_batch, clip, &gradient);
      optimizer.step(critic.parameters(), gradient);
      ++batches;
    }
    epoch_loss /= static_cast<Scalar>(batches);
  }
  return epoch_loss;
}

}  // namespace dtpo
