#pragma once

#include <Eigen/Core>

#include "dtpo/error.hpp"

namespace dtpo {

/// Row-wise softmax, shifted by the row max for stability.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> softmax_rows(
    const Eigen::MatrixBase<Derived>& logits) {
  using Matrix = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix out = logits.colwise() - logits.rowwise().maxCoeff();
  out = out.array().exp();
  out.array().colwise() /= out.rowwise().sum().array();
  return out;
}

namespace detail {

template <typename P, typename B, typename A>
void check_ldt_shapes(const Eigen::MatrixBase<P>& probs, const Eigen::VectorXi& actions,
                      const Eigen::MatrixBase<B>& behavior, const Eigen::MatrixBase<A>& advantages) {
  const Eigen::Index T = probs.rows();
  if (actions.size() != T || behavior.rows() != T || advantages.size() != T ||
      behavior.cols() != probs.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "L^DT inputs disagree in shape");
  }
}

}  // namespace detail

/// Surrogate mean_t[ p_t(a_t) / pi_old(a_t | s_t) * A_t ] where p_t is the
/// new policy's distribution at s_t. Larger is better.
template <typename P, typename B, typename A>
typename P::Scalar ldt_objective_from_probabilities(const Eigen::MatrixBase<P>& probs,
                                                    const Eigen::VectorXi& actions,
                                                    const Eigen::MatrixBase<B>& behavior,
                                                    const Eigen::MatrixBase<A>& advantages) {
  using Scalar = typename P::Scalar;
  detail::check_ldt_shapes(probs, actions, behavior, advantages);
  const Eigen::Index T = probs.rows();
  if (T == 0) return Scalar(0);
  Scalar total = 0;
  for (Eigen::Index t = 0; t < T; ++t) {
    const int a = actions[t];
    total += probs(t, a) / behavior(t, a) * advantages[t];
  }
  return total / static_cast<Scalar>(T);
}

/// Same surrogate with p_t = softmax(logits_t).
template <typename L, typename B, typename A>
typename L::Scalar ldt_objective(const Eigen::MatrixBase<L>& logits, const Eigen::VectorXi& actions,
                                 const Eigen::MatrixBase<B>& behavior,
                                 const Eigen::MatrixBase<A>& advantages) {
  return ldt_objective_from_probabilities(softmax_rows(logits), actions, behavior, advantages);
}

/// Gradient of each timestep's summand with respect to its own logits:
///   row t = A_t / pi_old(a_t) * s_t(a_t) * (onehot(a_t) - s_t),  s_t = softmax(l_t).
/// Rows are independent; the 1/T of the mean is not applied.
template <typename L, typename B, typename A>
Eigen::Matrix<typename L::Scalar, Eigen::Dynamic, Eigen::Dynamic> ldt_gradient(
    const Eigen::MatrixBase<L>& logits, const Eigen::VectorXi& actions,
    const Eigen::MatrixBase<B>& behavior, const Eigen::MatrixBase<A>& advantages) {
  using Scalar = typename L::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  detail::check_ldt_shapes(logits, actions, behavior, advantages);
  const Matrix s = softmax_rows(logits);
  Matrix grad = -s;
  for (Eigen::Index t = 0; t < s.rows(); ++t) {
    const int a = actions[t];
    grad(t, a) += Scalar(1);
    grad.row(t) *= advantages[t] / behavior(t, a) * s(t, a);
  }
  return grad;
}

}  // namespace dtpo
