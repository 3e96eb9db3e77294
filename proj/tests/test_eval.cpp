#include <doctest.h>

#include <algorithm>
#include <array>
#include <random>

#include "dtpo/env.hpp"
#include "dtpo/error.hpp"
#include "dtpo/evaluate.hpp"

using namespace dtpo;

namespace {

Eigen::VectorXd one_hot(int size, int index) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(size);
  v[index] = 1.0;
  return v;
}

/// The four-leaf tree that answers the Xor quadrant rule exactly.
PolicyTree xor_tree() {
  return {DecisionTree({TreeNode::split(0, 0.5, 1, 2), TreeNode::split(1, 0.5, 3, 4),
                        TreeNode::split(1, 0.5, 5, 6), TreeNode::leaf(one_hot(2, 0)),
                        TreeNode::leaf(one_hot(2, 1)), TreeNode::leaf(one_hot(2, 1)),
                        TreeNode::leaf(one_hot(2, 0))},
                       2),
          PolicyMode::Deterministic};
}

/// Lookup-table policy over a 4 x 4 grid observed as (row, col).
PolicyTree grid_policy(const std::array<std::array<int, 4>, 4>& actions) {
  std::vector<TreeNode> nodes;
  auto add = [&](TreeNode n) {
    nodes.push_back(std::move(n));
    return static_cast<int>(nodes.size()) - 1;
  };
  // Balanced splits at the half-integers: rows first, then columns.
  std::function<int(int, int, int, int)> build = [&](int r0, int r1, int c0, int c1) -> int {
    if (r1 - r0 > 1) {
      const int id = add(TreeNode{});
      const int mid = (r0 + r1) / 2;
      const int l = build(r0, mid, c0, c1);
      const int r = build(mid, r1, c0, c1);
      nodes[id] = TreeNode::split(0, mid - 0.5, l, r);
      return id;
    }
    if (c1 - c0 > 1) {
      const int id = add(TreeNode{});
      const int mid = (c0 + c1) / 2;
      const int l = build(r0, r1, c0, mid);
      const int r = build(r0, r1, mid, c1);
      nodes[id] = TreeNode::split(1, mid - 0.5, l, r);
      return id;
    }
    return add(TreeNode::leaf(one_hot(4, actions[r0][c0])));
  };
  build(0, 4, 0, 4);
  return {DecisionTree(std::move(nodes), 2), PolicyMode::Deterministic};
}

/// Probability of reaching the goal within `horizon` steps on the slippery
/// 4 x 4 lake under a fixed action table, by backward induction over the
/// transition kernel written out by hand.
double frozen_lake_success(const std::array<std::array<int, 4>, 4>& actions, int horizon) {
  const char* map[4] = {"SFFF", "FHFH", "FFFH", "HFFG"};
  const int dr[4] = {0, 1, 0, -1};  // left, down, right, up
  const int dc[4] = {-1, 0, 1, 0};
  std::array<std::array<double, 4>, 4> value{};  // zero steps left
  for (int h = 0; h < horizon; ++h) {
    std::array<std::array<double, 4>, 4> next{};
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) {
        if (map[r][c] == 'H' || map[r][c] == 'G') continue;
        double p = 0.0;
        for (int slip : {-1, 0, 1}) {
          const int d = (actions[r][c] + slip + 4) % 4;
          const int nr = std::clamp(r + dr[d], 0, 3), nc = std::clamp(c + dc[d], 0, 3);
          p += (map[nr][nc] == 'G' ? 1.0 : map[nr][nc] == 'H' ? 0.0 : value[nr][nc]) / 3.0;
        }
        next[r][c] = p;
      }
    }
    value = next;
  }
  return value[0][0];
}

}  // namespace

TEST_CASE("the quadrant tree is perfect on xor") {
  Xor env;
  const EvalReport r = evaluate(env, xor_tree(), 100, 0);
  CHECK(r.count == 100);
  CHECK(r.mean == 1000.0);
  CHECK(r.stderr_mean == 0.0);
  CHECK(std::all_of(r.returns.begin(), r.returns.end(), [](double v) { return v == 1000.0; }));
}

TEST_CASE("evaluation is reproducible and independent of the thread count") {
  auto env = make_environment("cartpole");
  const PolicyTree policy{DecisionTree({TreeNode::split(3, 0.0, 1, 2), TreeNode::leaf(one_hot(2, 0)),
                                        TreeNode::leaf(one_hot(2, 1))},
                                       4),
                          PolicyMode::Deterministic};
  const EvalReport a = evaluate(*env, policy, 40, 5);
  const EvalReport b = evaluate(*env, policy, 40, 5);
  const EvalReport c = evaluate(*env, policy, 40, 5, 3);
  CHECK(a.returns == b.returns);
  CHECK(a.returns == c.returns);
  CHECK(a.mean > 100.0);
  CHECK(evaluate(*env, policy, 40, 6).returns != a.returns);
}

TEST_CASE("always-left on the 4x4 lake never reaches the goal") {
  const FrozenLake lake = FrozenLake::four_by_four();
  std::array<std::array<int, 4>, 4> left{};
  CHECK(frozen_lake_success(left, 100) == 0.0);
  const EvalReport r = evaluate(lake, determinize(uniform_policy(4, 2)), 500, 1);
  CHECK(r.mean == 0.0);
}

TEST_CASE("a fixed lake policy scores its exact success probability") {
  const std::array<std::array<int, 4>, 4> table = {{
      {0, 3, 3, 3},
      {0, 0, 0, 0},
      {3, 1, 0, 0},
      {0, 2, 1, 0},
  }};
  const double exact = frozen_lake_success(table, 100);
  CHECK(exact > 0.7);
  const FrozenLake lake = FrozenLake::four_by_four();
  const EvalReport r = evaluate(lake, grid_policy(table), 4000, 11);
  CHECK(std::abs(r.mean - exact) <= 3.0 * r.stderr_mean);

  std::array<std::array<int, 4>, 4> mixed{};
  for (int i = 0; i < 16; ++i) mixed[i / 4][i % 4] = (i * 7 + 1) % 4;
  const double exact_mixed = frozen_lake_success(mixed, 100);
  const EvalReport m = evaluate(lake, grid_policy(mixed), 4000, 12);
  CHECK(std::abs(m.mean - exact_mixed) <= 3.0 * std::max(m.stderr_mean, 1e-3));
}

TEST_CASE("report aggregation") {
  const EvalReport r = EvalReport::from_returns({1, 2, 3, 4}, 9);
  CHECK(r.mean == 2.5);
  CHECK(r.stderr_mean == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-15));
  CHECK(r.summary() == "2.50 ± 0.65");
  CHECK(EvalReport::csv_header() == "env,rollouts,seed,mean,stderr");
  CHECK(r.csv_row("xor").rfind("xor,4,9,2.5,", 0) == 0);
  CHECK(EvalReport::from_returns({7}, 0).stderr_mean == 0.0);

  std::vector<double> v;
  for (int i = 0; i < 50; ++i) v.push_back(i * 3 % 17);
  std::vector<double> w = v;
  std::shuffle(w.begin(), w.end(), std::mt19937_64(2));
  CHECK(EvalReport::from_returns(v, 0).mean == EvalReport::from_returns(w, 0).mean);
}

TEST_CASE("evaluate rejects mismatched or stochastic policies") {
  Xor env;
  try {
    evaluate(env, determinize(uniform_policy(2, 4)), 10, 0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
  try {
    evaluate(env, uniform_policy(2, 2), 10, 0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
  }
}
