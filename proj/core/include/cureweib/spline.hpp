#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

namespace cureweib {

// Natural cubic regression spline parameterized by its values at the knots.
// The penalty is the integrated squared second derivative, D' B^{-1} D, whose
// null space is exactly the linear functions of the covariate. Outside the
// knot range the spline continues linearly.
class CubicRegressionSpline {
 public:
  CubicRegressionSpline() = default;
  explicit CubicRegressionSpline(std::vector<double> knots);

  // Knots at quantiles of the distinct values of `x`; fewer knots when x has
  // fewer than k distinct values (never fewer than 3).
  static CubicRegressionSpline at_quantiles(std::span<const double> x, int k);

  int size() const { return static_cast<int>(knots_.size()); }
  const std::vector<double>& knots() const { return knots_; }

  Eigen::RowVectorXd basis_row(double x) const;
  Eigen::MatrixXd basis(std::span<const double> x) const;
  const Eigen::MatrixXd& penalty() const { return penalty_; }

 private:
  std::vector<double> knots_;
  Eigen::MatrixXd second_derivs_;  // k x k map from knot values to f'' at knots
  Eigen::MatrixXd penalty_;
};

// Sum-to-zero (over the training rows) reparameterization of a basis:
// columns Z spanning the null space of the constraint c' beta = 0.
struct CenteringConstraint {
  Eigen::MatrixXd z;  // k x (k-1)

  static CenteringConstraint from_basis(const Eigen::MatrixXd& basis);
};

// Row-wise Kronecker product of two marginal design matrices.
Eigen::MatrixXd row_kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace cureweib
