#pragma once

#include <Eigen/Dense>

namespace bdsde {

struct RegressionResult {
  Eigen::VectorXd coeffs;
  Eigen::Index rank = 0;
  bool rank_deficient = false;
  double residual = 0.0;  // Euclidean norm of X b - y
};

/// Least squares via complete orthogonal decomposition; the minimum-norm
/// solution when X is rank deficient. Requires rows(X) == size(y) >= cols(X).
RegressionResult regress(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// One factorization reused for several right-hand sides.
class LeastSquares {
 public:
  explicit LeastSquares(const Eigen::MatrixXd& X);
  Eigen::Index rank() const { return cod_.rank(); }
  bool rank_deficient() const { return cod_.rank() < cols_; }
  Eigen::VectorXd solve(const Eigen::VectorXd& y) const;

 private:
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_;
  Eigen::Index rows_, cols_;
};

}  // namespace bdsde
