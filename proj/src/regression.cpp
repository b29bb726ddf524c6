#include "bdsde/regression.hpp"

#include <stdexcept>

namespace bdsde {

LeastSquares::LeastSquares(const Eigen::MatrixXd& X) : rows_(X.rows()), cols_(X.cols()) {
  if (cols_ < 1) throw std::invalid_argument("regress: no feature columns");
  if (rows_ < cols_) throw std::invalid_argument("regress: fewer rows than columns");
  cod_.compute(X);
}

Eigen::VectorXd LeastSquares::solve(const Eigen::VectorXd& y) const {
  if (y.size() != rows_) throw std::invalid_argument("regress: target length differs from row count");
  return cod_.solve(y);
}

RegressionResult regress(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) throw std::invalid_argument("regress: target length differs from row count");
  LeastSquares ls(X);
  RegressionResult r;
  r.coeffs = ls.solve(y);
  r.rank = ls.rank();
  r.rank_deficient = ls.rank_deficient();
  r.residual = (X * r.coeffs - y).norm();
  return r;
}

}  // namespace bdsde
