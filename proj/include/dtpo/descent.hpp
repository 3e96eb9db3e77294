#pragma once

#include <Eigen/Core>

#include <functional>
#include <vector>

#include "dtpo/tree.hpp"

namespace dtpo {

/// Differentiable loss over an n x k prediction matrix (to be minimised).
struct DifferentiableLoss {
  std::function<double(const Eigen::MatrixXd&)> value;
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> gradient;
};

struct DescentResult {
  DecisionTree tree;
  double loss = 0.0;
  int best_iteration = 0;         // 1-based
  std::vector<double> history;    // loss of every fitted tree
};

/// Refits a whole regression tree per iteration to the gradient-shifted
/// targets Y_{i-1} - eta * grad L(Y_{i-1}), where Y_{i-1} are the previous
/// tree's predictions on X (Y0 for the first iteration), and returns the
/// tree with the lowest loss seen (earliest on ties).
DescentResult incremental_tree_descent(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y0,
                                       const DifferentiableLoss& loss, double eta,
                                       int iterations, int leaf_budget);

}  // namespace dtpo
