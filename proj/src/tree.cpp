#include "dtpo/tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "dtpo/error.hpp"

namespace dtpo {

DecisionTree::DecisionTree(std::vector<TreeNode> nodes, Eigen::Index feature_count)
    : nodes_(std::move(nodes)), feature_count_(feature_count) {
  if (nodes_.empty()) throw Error(ErrorCode::MalformedInput, "tree has no nodes");
  if (feature_count_ < 0) {
    throw Error(ErrorCode::MalformedInput, "negative feature count");
  }
  const int n = static_cast<int>(nodes_.size());
  std::vector<int> parents(n, 0);
  output_size_ = -1;
  for (int i = 0; i < n; ++i) {
    const TreeNode& node = nodes_[i];
    const std::string where = "node " + std::to_string(i);
    if (node.is_leaf()) {
      if (node.output.size() == 0) {
        throw Error(ErrorCode::MalformedInput, where + ": leaf without output");
      }
      if (output_size_ >= 0 && node.output.size() != output_size_) {
        throw Error(ErrorCode::MalformedInput, where + ": leaf output length differs");
      }
      output_size_ = node.output.size();
      continue;
    }
    if (node.feature >= feature_count_) {
      throw Error(ErrorCode::MalformedInput,
                  where + ": feature " + std::to_string(node.feature) + " out of range");
    }
    for (int child : {node.left, node.right}) {
      if (child < 0 || child >= n || child == 0) {
        throw Error(ErrorCode::MalformedInput,
                    where + ": invalid child reference " + std::to_string(child));
      }
      ++parents[child];
    }
  }
  for (int i = 1; i < n; ++i) {
    if (parents[i] != 1) {
      throw Error(ErrorCode::MalformedInput,
                  "node " + std::to_string(i) + " has " + std::to_string(parents[i]) +
                      " parents");
    }
  }
  // One parent per non-root node still admits detached cycles.
  std::vector<int> stack{0};
  int visited = 0;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    ++visited;
    if (!nodes_[i].is_leaf()) {
      stack.push_back(nodes_[i].right);
      stack.push_back(nodes_[i].left);
    }
    if (visited > n) break;
  }
  if (visited != n) throw Error(ErrorCode::MalformedInput, "nodes unreachable from root");
}

DecisionTree DecisionTree::constant(Eigen::VectorXd output, Eigen::Index feature_count) {
  return DecisionTree({TreeNode::leaf(std::move(output))}, feature_count);
}

int DecisionTree::leaf_count() const {
  return static_cast<int>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int DecisionTree::depth() const {
  std::function<int(int)> visit = [&](int i) -> int {
    const TreeNode& n = nodes_[i];
    return n.is_leaf() ? 0 : 1 + std::max(visit(n.left), visit(n.right));
  };
  return nodes_.empty() ? 0 : visit(0);
}

int DecisionTree::leaf_index(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != feature_count_) {
    throw Error(ErrorCode::DimensionMismatch,
                "observation has " + std::to_string(x.size()) + " features, tree expects " +
                    std::to_string(feature_count_));
  }
  int i = 0;
  while (!nodes_[i].is_leaf()) {
    const TreeNode& n = nodes_[i];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return i;
}

Eigen::MatrixXd DecisionTree::predict_rows(const Eigen::MatrixXd& samples) const {
  if (samples.cols() != feature_count_) {
    throw Error(ErrorCode::DimensionMismatch,
                "sample matrix has " + std::to_string(samples.cols()) +
                    " columns, tree expects " + std::to_string(feature_count_));
  }
  Eigen::MatrixXd out(samples.rows(), output_size_);
  for (Eigen::Index r = 0; r < samples.rows(); ++r) {
    out.row(r) = nodes_[leaf_index(samples.row(r).transpose())].output.transpose();
  }
  return out;
}

bool operator==(const DecisionTree& a, const DecisionTree& b) {
  if (a.feature_count_ != b.feature_count_ || a.nodes_.size() != b.nodes_.size()) return false;
  for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
    const TreeNode& x = a.nodes_[i];
    const TreeNode& y = b.nodes_[i];
    if (x.feature != y.feature || x.left != y.left || x.right != y.right) return false;
    if (x.is_leaf() ? x.output != y.output : x.threshold != y.threshold) return false;
  }
  return true;
}

// Fitting -------------------------------------------------------------------

double split_score(const Eigen::MatrixXd& left, const Eigen::MatrixXd& right) {
  const double n = static_cast<double>(left.rows() + right.rows());
  const double k = static_cast<double>(std::max(left.cols(), right.cols()));
  auto sse = [](const Eigen::MatrixXd& m) {
    if (m.rows() == 0) return 0.0;
    return (m.rowwise() - m.colwise().mean()).squaredNorm();
  };
  // (|L|/n) * (1/k) * sum_c MSE_L,c + same for R, i.e. total SSE / (n k).
  return (sse(left) + sse(right)) / (n * k);
}

namespace {

using IndexList = std::vector<int>;

struct SplitChoice {
  bool valid = false;
  int feature = -1;
  double threshold = 0.0;
  double cost = std::numeric_limits<double>::infinity();  // SSE left + right
};

struct Frontier {
  int node = 0;
  std::vector<IndexList> sorted;  // per feature, this node's rows in feature order
  double sse = 0.0;
  SplitChoice best;
};

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) : X_(X), Y_(Y) {}

  SplitChoice best_split(const Frontier& f) const;
  double node_sse(const IndexList& rows) const;
  bool is_pure(const IndexList& rows) const;
  Eigen::VectorXd mean(const IndexList& rows) const;

 private:
  const Eigen::MatrixXd& X_;
  const Eigen::MatrixXd& Y_;
};

Eigen::VectorXd TreeBuilder::mean(const IndexList& rows) const {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(Y_.cols());
  for (int r : rows) sum += Y_.row(r).transpose();
  return sum / static_cast<double>(rows.size());
}

double TreeBuilder::node_sse(const IndexList& rows) const {
  const Eigen::VectorXd mu = mean(rows);
  double s = 0.0;
  for (int r : rows) s += (Y_.row(r).transpose() - mu).squaredNorm();
  return s;
}

bool TreeBuilder::is_pure(const IndexList& rows) const {
  for (Eigen::Index c = 0; c < Y_.cols(); ++c) {
    double lo = Y_(rows.front(), c), hi = lo;
    for (int r : rows) {
      lo = std::min(lo, Y_(r, c));
      hi = std::max(hi, Y_(r, c));
    }
    if (hi - lo > 1e-12) return false;
  }
  return true;
}

SplitChoice TreeBuilder::best_split(const Frontier& f) const {
  SplitChoice best;
  const IndexList& rows = f.sorted.front();
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  if (n < 2 || is_pure(rows)) return best;

  // Centering by the node mean keeps the running-sum SSE well conditioned.
  const Eigen::VectorXd mu = mean(rows);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(Y_.cols());
  double total_sq = 0.0;
  for (int r : rows) {
    const auto d = Y_.row(r).transpose() - mu;
    total += d;
    total_sq += d.squaredNorm();
  }
  const double tol = 1e-10 * f.sse;

  Eigen::VectorXd sum(Y_.cols());
  for (Eigen::Index j = 0; j < X_.cols(); ++j) {
    const IndexList& order = f.sorted[j];
    sum.setZero();
    double sq = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const auto d = Y_.row(order[i]).transpose() - mu;
      sum += d;
      sq += d.squaredNorm();
      const double a = X_(order[i], j);
      const double b = X_(order[i + 1], j);
      if (!(a < b)) continue;

      const double nl = static_cast<double>(i + 1);
      const double nr = static_cast<double>(n - i - 1);
      const double sse_left = std::max(sq - sum.squaredNorm() / nl, 0.0);
      const double sse_right =
          std::max((total_sq - sq) - (total - sum).squaredNorm() / nr, 0.0);
      const double cost = sse_left + sse_right;
      if (!best.valid || cost < best.cost - tol) {
        double v = std::midpoint(a, b);
        if (v >= b) v = a;
        best = {true, static_cast<int>(j), v, cost};
      }
    }
  }
  return best;
}

}  // namespace

DecisionTree fit_regression_tree(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                 int leaf_budget) {
  if (X.rows() == 0 || Y.rows() == 0) {
    throw Error(ErrorCode::EmptyDataset, "cannot fit a tree on zero samples");
  }
  if (X.rows() != Y.rows()) {
    throw Error(ErrorCode::DimensionMismatch,
                "X has " + std::to_string(X.rows()) + " rows but Y has " +
                    std::to_string(Y.rows()));
  }
  if (Y.cols() == 0) throw Error(ErrorCode::DimensionMismatch, "Y has no output columns");
  if (leaf_budget < 1) throw Error(ErrorCode::InvalidArgument, "leaf budget must be >= 1");
  if (!X.allFinite() || !Y.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "non-finite entries in training data");
  }

  const int n = static_cast<int>(X.rows());
  const Eigen::Index m = X.cols();
  TreeBuilder builder(X, Y);

  Frontier root;
  root.sorted.resize(std::max<Eigen::Index>(m, 1));
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(root.sorted.size()); ++j) {
    IndexList& order = root.sorted[j];
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    if (j < m) {
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return X(a, j) < X(b, j); });
    }
  }
  root.sse = builder.node_sse(root.sorted.front());
  if (m > 0) root.best = builder.best_split(root);
  const double gain_tol = 1e-12 * root.sse;

  std::vector<TreeNode> nodes(1);
  std::vector<Frontier> frontier;
  frontier.push_back(std::move(root));

  while (static_cast<int>(frontier.size()) < leaf_budget) {
    // Expand the leaf whose split removes the most error. The frontier is
    // kept in node-id order, so the first maximum is the earliest leaf.
    int pick = -1;
    double best_gain = 0.0;
    for (int i = 0; i < static_cast<int>(frontier.size()); ++i) {
      const Frontier& f = frontier[i];
      if (!f.best.valid) continue;
      const double gain = f.sse - f.best.cost;
      if (pick < 0 || gain > best_gain + gain_tol) {
        pick = i;
        best_gain = gain;
      }
    }
    if (pick < 0) break;

    Frontier parent = std::move(frontier[pick]);
    frontier.erase(frontier.begin() + pick);

    const int j = parent.best.feature;
    const double v = parent.best.threshold;
    const int left_id = static_cast<int>(nodes.size());
    const int right_id = left_id + 1;
    nodes[parent.node] = TreeNode::split(j, v, left_id, right_id);
    nodes.emplace_back();
    nodes.emplace_back();

    Frontier left, right;
    left.node = left_id;
    right.node = right_id;
    left.sorted.resize(parent.sorted.size());
    right.sorted.resize(parent.sorted.size());
    for (std::size_t f = 0; f < parent.sorted.size(); ++f) {
      for (int r : parent.sorted[f]) {
        (X(r, j) <= v ? left.sorted[f] : right.sorted[f]).push_back(r);
      }
    }
    for (Frontier* child : {&left, &right}) {
      child->sse = builder.node_sse(child->sorted.front());
      child->best = builder.best_split(*child);
      frontier.push_back(std::move(*child));
    }
  }

  for (const Frontier& f : frontier) {
    nodes[f.node] = TreeNode::leaf(builder.mean(f.sorted.front()));
  }
  return DecisionTree(std::move(nodes), m);
}

// Policies ------------------------------------------------------------------

Eigen::Index argmax(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

int PolicyTree::greedy_action(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return static_cast<int>(argmax(tree.predict(x)));
}

PolicyTree uniform_policy(int action_count, Eigen::Index feature_count) {
  if (action_count < 1) throw Error(ErrorCode::InvalidArgument, "need at least one action");
  return {DecisionTree::constant(Eigen::VectorXd::Constant(action_count, 1.0 / action_count),
                                 feature_count),
          PolicyMode::Stochastic};
}

PolicyTree determinize(const PolicyTree& policy) {
  std::vector<TreeNode> nodes = policy.tree.nodes();
  for (TreeNode& n : nodes) {
    if (!n.is_leaf()) continue;
    const Eigen::Index a = argmax(n.output);
    n.output.setZero();
    n.output[a] = 1.0;
  }
  return {DecisionTree(std::move(nodes), policy.tree.feature_count()),
          PolicyMode::Deterministic};
}

PolicyTree merge_redundant(const PolicyTree& policy) {
  const std::vector<TreeNode>& in = policy.tree.nodes();
  std::vector<TreeNode> out;
  out.reserve(in.size());

  // Preorder rebuild; children are merged before their parent is examined,
  // so one pass reaches the fixpoint.
  std::function<int(int)> rebuild = [&](int i) -> int {
    const TreeNode& n = in[i];
    const int id = static_cast<int>(out.size());
    out.push_back(n);
    if (n.is_leaf()) return id;
    const int l = rebuild(n.left);
    const int r = rebuild(n.right);
    if (out[l].is_leaf() && out[r].is_leaf() &&
        argmax(out[l].output) == argmax(out[r].output)) {
      Eigen::VectorXd kept = out[l].output;
      out.resize(id + 1);
      out[id] = TreeNode::leaf(std::move(kept));
    } else {
      out[id] = TreeNode::split(n.feature, n.threshold, l, r);
    }
    return id;
  };
  rebuild(0);
  return {DecisionTree(std::move(out), policy.tree.feature_count()), policy.mode};
}

bool is_stochastic(const DecisionTree& tree, double tol) {
  for (const TreeNode& n : tree.nodes()) {
    if (!n.is_leaf()) continue;
    if ((n.output.array() < 0.0).any() || std::abs(n.output.sum() - 1.0) > tol) return false;
  }
  return true;
}

bool is_one_hot(const DecisionTree& tree) {
  for (const TreeNode& n : tree.nodes()) {
    if (!n.is_leaf()) continue;
    const auto ones = (n.output.array() == 1.0).count();
    const auto zeros = (n.output.array() == 0.0).count();
    if (ones != 1 || ones + zeros != n.output.size()) return false;
  }
  return true;
}

}  // namespace dtpo
