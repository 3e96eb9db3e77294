#include "dtpo/descent.hpp"

#include "dtpo/error.hpp"

namespace dtpo {

DescentResult incremental_tree_descent(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y0,
                                       const DifferentiableLoss& loss, double eta,
                                       int iterations, int leaf_budget) {
  if (iterations < 1) throw Error(ErrorCode::InvalidArgument, "need at least one iteration");
  if (!loss.value || !loss.gradient) {
    throw Error(ErrorCode::InvalidArgument, "loss needs both value and gradient");
  }

  DescentResult result;
  Eigen::MatrixXd current = Y0;
  for (int i = 1; i <= iterations; ++i) {
    const Eigen::MatrixXd targets = current - eta * loss.gradient(current);
    DecisionTree tree = fit_regression_tree(X, targets, leaf_budget);
    current = tree.predict_rows(X);
    const double value = loss.value(current);
    result.history.push_back(value);
    if (i == 1 || value < result.loss) {
      result.loss = value;
      result.best_iteration = i;
      result.tree = std::move(tree);
    }
  }
  return result;
}

}  // namespace dtpo
