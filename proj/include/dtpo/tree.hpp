#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace dtpo {

struct TreeNode {
  /// Feature tested by a split node; -1 marks a leaf.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  /// Leaf prediction; empty for split nodes.
  Eigen::VectorXd output;

  bool is_leaf() const { return feature < 0; }

  static TreeNode leaf(Eigen::VectorXd output) {
    TreeNode n;
    n.output = std::move(output);
    return n;
  }
  static TreeNode split(int feature, double threshold, int left, int right) {
    TreeNode n;
    n.feature = feature;
    n.threshold = threshold;
    n.left = left;
    n.right = right;
    return n;
  }
};

/// Binary tree of axis-aligned threshold splits with vector-valued leaves.
/// Node 0 is the root. A sample goes left iff x[feature] <= threshold.
/// Immutable once constructed; the constructor validates the structure.
class DecisionTree {
 public:
  DecisionTree() = default;

  /// Throws MalformedInput if the nodes do not form a single binary tree
  /// rooted at 0 with equal-length leaf outputs and in-range features.
  DecisionTree(std::vector<TreeNode> nodes, Eigen::Index feature_count);

  static DecisionTree constant(Eigen::VectorXd output, Eigen::Index feature_count);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(int i) const { return nodes_[i]; }
  Eigen::Index feature_count() const { return feature_count_; }
  Eigen::Index output_size() const { return output_size_; }
  int leaf_count() const;
  int depth() const;
  bool empty() const { return nodes_.empty(); }

  /// Index of the leaf reached by `x`. Throws DimensionMismatch.
  int leaf_index(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  const Eigen::VectorXd& predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return nodes_[leaf_index(x)].output;
  }

  /// Row-wise prediction for an n x m sample matrix; returns n x k.
  Eigen::MatrixXd predict_rows(const Eigen::MatrixXd& samples) const;

  friend bool operator==(const DecisionTree& a, const DecisionTree& b);

 private:
  std::vector<TreeNode> nodes_;
  Eigen::Index feature_count_ = 0;
  Eigen::Index output_size_ = 0;
};

/// Greedy multi-output CART regression tree.
///
/// Each leaf predicts the column-wise mean of its targets. A split (j, v)
/// is scored by the size-weighted mean over outputs of the per-output MSE
/// of the two sides, minimised over features j and midpoints v between
/// consecutive distinct feature values (ties: lowest feature, then lowest
/// threshold). Growth is best-first: the leaf whose best split removes the
/// most squared error is expanded next (ties: the earliest created leaf),
/// until `leaf_budget` leaves exist or no leaf can be split. A leaf is
/// final when it holds one sample, its targets are constant within 1e-12,
/// or no threshold separates its samples.
///
/// Throws EmptyDataset when there are no rows, DimensionMismatch when X and
/// Y disagree on the row count, InvalidArgument for a zero budget or
/// non-finite input.
DecisionTree fit_regression_tree(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                 int leaf_budget);

/// Weighted split score used by fit_regression_tree for targets split into
/// `left` and `right` row sets. Exposed for tests and diagnostics.
double split_score(const Eigen::MatrixXd& left, const Eigen::MatrixXd& right);

enum class PolicyMode { Stochastic, Deterministic };

/// Decision tree whose leaves hold one entry per action.
struct PolicyTree {
  DecisionTree tree;
  PolicyMode mode = PolicyMode::Stochastic;

  int action_count() const { return static_cast<int>(tree.output_size()); }
  const Eigen::VectorXd& probabilities(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return tree.predict(x);
  }
  /// Most probable action, lowest index on ties.
  int greedy_action(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// Single leaf with probability 1/n for each action.
PolicyTree uniform_policy(int action_count, Eigen::Index feature_count);

/// Lowest index of the maximum entry.
Eigen::Index argmax(const Eigen::Ref<const Eigen::VectorXd>& v);

/// One-hot at the argmax of every leaf; structure unchanged.
PolicyTree determinize(const PolicyTree& policy);

/// Collapses, until nothing changes, every split whose two children are
/// leaves with the same argmax into one leaf carrying the left child's
/// output. The greedy action is unchanged for every input.
PolicyTree merge_redundant(const PolicyTree& policy);

/// True when every leaf is a probability vector (sum 1 within `tol`).
bool is_stochastic(const DecisionTree& tree, double tol = 1e-6);
/// True when every leaf is one-hot.
bool is_one_hot(const DecisionTree& tree);

// Persistence ---------------------------------------------------------------

struct PolicyDocument {
  DecisionTree tree;
  std::vector<std::string> feature_names;
  std::vector<std::string> action_names;
};

/// JSON document {"feature_names", "action_names", "nodes"}. Missing names
/// default to "f_j" and "a_i".
std::string serialize(const DecisionTree& tree,
                      const std::vector<std::string>& feature_names = {},
                      const std::vector<std::string>& action_names = {});

/// Throws MalformedInput on any syntactic or structural problem.
PolicyDocument deserialize(const std::string& text);

/// Graphviz digraph. Splits read "<feature name> ≤ <threshold>"; leaves show
/// the action name for deterministic policies and the probability vector
/// otherwise. Node ids follow the tree's node order.
std::string to_dot(const PolicyTree& policy, const std::vector<std::string>& feature_names = {},
                   const std::vector<std::string>& action_names = {});

/// Shortest decimal text that parses back to exactly `v`.
std::string format_number(double v);

}  // namespace dtpo
