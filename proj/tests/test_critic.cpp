#include <doctest.h>

#include <cmath>
#include <random>

#include "dtpo/critic.hpp"
#include "properties.hpp"

using namespace dtpo;

namespace {

/// Straight-line forward pass over the documented parameter layout.
double forward_oracle(const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
  const int m = static_cast<int>(x.size()), H = 64;
  const double* w1 = p.data();
  const double* b1 = w1 + H * m;
  const double* w2 = b1 + H;
  const double* b2 = w2 + H * H;
  const double* w3 = b2 + H;
  const double b3 = w3[H];
  double h1[64], h2[64];
  for (int i = 0; i < H; ++i) {
    double z = b1[i];
    for (int j = 0; j < m; ++j) z += w1[i + j * H] * x[j];
    h1[i] = std::tanh(z);
  }
  for (int i = 0; i < H; ++i) {
    double z = b2[i];
    for (int j = 0; j < H; ++j) z += w2[i + j * H] * h1[j];
    h2[i] = std::tanh(z);
  }
  double out = b3;
  for (int i = 0; i < H; ++i) out += w3[i] * h2[i];
  return out;
}

}  // namespace

TEST_CASE("forward pass matches a hand-rolled oracle") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int m = 1; m <= 5; ++m) {
    const Critic<double> net(m, 100 + m);
    Eigen::MatrixXd xs(7, m);
    for (Eigen::Index i = 0; i < xs.size(); ++i) xs.data()[i] = u(rng);
    const Eigen::VectorXd batch = net.values(xs);
    for (int r = 0; r < 7; ++r) {
      const Eigen::VectorXd x = xs.row(r).transpose();
      const double expected = forward_oracle(net.parameters(), x);
      CHECK(net.value(x) == doctest::Approx(expected).epsilon(1e-12));
      CHECK(batch[r] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero weights give zero value") {
  const Critic<double> net(3, Eigen::VectorXd::Zero(Critic<double>::parameter_count(3)));
  CHECK(net.value(Eigen::Vector3d(1, -4, 9)) == 0.0);
  CHECK(net.value(Eigen::Vector3d::Zero()) == 0.0);
}

TEST_CASE("value is Lipschitz in the input") {
  const Critic<double> net(4, 3);
  const double bound = net.w3().norm() * (Eigen::MatrixXd(net.w2())).norm() *
                       (Eigen::MatrixXd(net.w1())).norm();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd x(4), d(4);
    for (int j = 0; j < 4; ++j) x[j] = n(rng), d[j] = 1e-3 * n(rng);
    CHECK(std::abs(net.value(x + d) - net.value(x)) <= bound * d.norm() + 1e-15);
  }
}

TEST_CASE("wrong input size is rejected") {
  const Critic<double> net(2, 0);
  CHECK_THROWS_AS(net.value(Eigen::Vector3d::Zero()), Error);
  CHECK_THROWS_AS(Critic<double>(2, Eigen::VectorXd::Zero(5)), Error);
}

TEST_CASE("clipped value loss") {
  CHECK(clipped_value_loss(1.0, 0.0, 2.0, 0.2) == doctest::Approx(3.24).epsilon(1e-15));
  CHECK(clipped_value_loss(0.7, 0.7, 0.7, 0.2) == 0.0);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const double old = u(rng), target = u(rng);
    const double value = old + 0.2 * u(rng) / 3.0;
    CHECK(clipped_value_loss(value, old, target, 0.2) == (value - target) * (value - target));
  }
}

TEST_CASE("critic gradient matches finite differences") {
  const props::Outcome out = props::critic_gradient_check(100, 21);
  CHECK(out.cases == 100);
  CHECK_MESSAGE(out.ok, out.failure);
}

TEST_CASE("clipped-branch gradient matches finite differences") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Critic<double> net(2, 5);
  Eigen::MatrixXd x(4, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  // Old values sit well away from the predictions so the clip is active.
  const Eigen::VectorXd old_values = net.values(x).array() + 0.5;
  const Eigen::VectorXd targets = Eigen::VectorXd::Constant(4, 3.0);
  Eigen::VectorXd grad;
  net.loss_and_gradient(x, old_values, targets, 0.2, &grad);
  for (Eigen::Index p = 0; p < grad.size(); p += 37) {
    Critic<double> plus = net, minus = net;
    plus.parameters()[p] += 1e-5;
    minus.parameters()[p] -= 1e-5;
    const double numeric = (plus.loss_and_gradient(x, old_values, targets, 0.2, nullptr) -
                            minus.loss_and_gradient(x, old_values, targets, 0.2, nullptr)) /
                           2e-5;
    CAPTURE(p);
    CHECK(props::relative_error(grad[p], numeric) < 1e-4);
  }
}

TEST_CASE("first Adam step on a scalar") {
  Adam<double> adam(1);
  Eigen::VectorXd p(1), g(1);
  p << 1.0;
  g << 1.0;
  adam.step(p, g);
  // m_hat = v_hat = 1, so the step is lr * 1 / (1 + eps).
  CHECK(std::abs(p[0] - (1.0 - 2.5e-4 / (1.0 + 1e-8))) < 1e-12);
  CHECK(adam.step_count == 1);
}

TEST_CASE("training lowers the error on a sine regression") {
  Eigen::MatrixXd x(128, 1);
  Eigen::VectorXd y(128);
  std::mt19937_64 data(0);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 128; ++i) {
    x(i, 0) = u(data);
    y[i] = std::sin(x(i, 0));
  }
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Critic<double> net(1, seed);
    Adam<double> adam(net.parameters().size());
    const double before = (net.values(x) - y).squaredNorm() / 128.0;
    Eigen::VectorXd grad;
    for (int step = 0; step < 50; ++step) {
      net.loss_and_gradient(x, net.values(x), y, 1e9, &grad);
      adam.step(net.parameters(), grad);
    }
    const double after = (net.values(x) - y).squaredNorm() / 128.0;
    improved += after < before;
  }
  CHECK(improved >= 95);
}

TEST_CASE("train_epochs is deterministic and reduces the loss") {
  Eigen::MatrixXd x(300, 2);
  Eigen::VectorXd y(300);
  std::mt19937_64 data(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    x.row(i) << u(data), u(data);
    y[i] = x(i, 0) - 0.5 * x(i, 1);
  }
  auto run = [&](int epochs) {
    Critic<double> net(2, 7);
    Adam<double> adam(net.parameters().size(), 1e-3);
    Rng rng(3);
    train_epochs(net, adam, x, y, epochs, 64, 0.2, rng);
    return net;
  };
  const Critic<double> a = run(4), b = run(4);
  CHECK(a.parameters() == b.parameters());
  const Critic<double> fresh(2, 7);
  CHECK((a.values(x) - y).squaredNorm() < (fresh.values(x) - y).squaredNorm());

  Critic<double> net(2, 7);
  Adam<double> adam(net.parameters().size());
  Rng rng(0);
  train_epochs(net, adam, x, y, 2, 64, 0.2, rng);
  CHECK(adam.step_count == 2 * 5);  // ceil(300 / 64) minibatches per epoch
  CHECK_THROWS_AS(train_epochs(net, adam, x, y, 0, 64, 0.2, rng), Error);
}
