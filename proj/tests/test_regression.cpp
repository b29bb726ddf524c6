#include <random>

#include "doctest.h"

#include "bdsde/regression.hpp"

using namespace bdsde;

TEST_CASE("exactly linear targets") {
  Eigen::MatrixXd X(6, 3);
  X << 1, 0, 2, 1, 1, 0, 1, 2, 1, 1, 3, 5, 1, -1, 4, 1, 0.5, -2;
  const Eigen::Vector3d beta(0.5, -1.25, 2.0);
  const auto r = regress(X, X * beta);
  CHECK((r.coeffs - beta).norm() < 1e-12);
  CHECK(r.residual < 1e-12);
  CHECK(r.rank == 3);
  CHECK_FALSE(r.rank_deficient);
}

TEST_CASE("constant targets with an intercept") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  Eigen::MatrixXd X(50, 3);
  for (int i = 0; i < 50; ++i) X.row(i) << 1.0, n(rng), n(rng);
  const auto r = regress(X, Eigen::VectorXd::Constant(50, 4.5));
  CHECK(r.coeffs(0) == doctest::Approx(4.5).epsilon(1e-12));
  CHECK(std::abs(r.coeffs(1)) < 1e-12);
  CHECK(std::abs(r.coeffs(2)) < 1e-12);
}

TEST_CASE("random system against the normal equations") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  Eigen::MatrixXd X(500, 4);
  Eigen::VectorXd y(500);
  for (int i = 0; i < 500; ++i) {
    for (int j = 0; j < 4; ++j) X(i, j) = n(rng);
    y(i) = n(rng);
  }
  const Eigen::VectorXd oracle = (X.transpose() * X).llt().solve(X.transpose() * y);
  const auto r = regress(X, y);
  CHECK((r.coeffs - oracle).norm() <= 1e-8 * oracle.norm());
  CHECK(r.residual == doctest::Approx((X * oracle - y).norm()).epsilon(1e-10));

  const LeastSquares ls(X);
  CHECK((ls.solve(y) - oracle).norm() <= 1e-8 * oracle.norm());
}

TEST_CASE("rank deficiency is reported") {
  Eigen::MatrixXd X(10, 3);
  for (int i = 0; i < 10; ++i) X.row(i) << 1.0, i, 2.0 * i;
  const auto r = regress(X, Eigen::VectorXd::LinSpaced(10, 0.0, 9.0));
  CHECK(r.rank_deficient);
  CHECK(r.rank == 2);
  CHECK(r.residual < 1e-10);
}

TEST_CASE("shape errors") {
  CHECK_THROWS_AS(regress(Eigen::MatrixXd::Ones(2, 3), Eigen::VectorXd::Ones(2)), std::invalid_argument);
  CHECK_THROWS_AS(regress(Eigen::MatrixXd::Ones(4, 2), Eigen::VectorXd::Ones(3)), std::invalid_argument);
}
