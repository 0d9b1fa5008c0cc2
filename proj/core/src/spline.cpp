#include "cureweib/spline.hpp"

#include "cureweib/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace cureweib {

CubicRegressionSpline::CubicRegressionSpline(std::vector<double> knots) : knots_(std::move(knots)) {
  const int k = size();
  if (k < 3) throw InputError("cubic regression spline needs at least 3 knots");
  for (int i = 1; i < k; ++i)
    if (!(knots_[static_cast<std::size_t>(i)] > knots_[static_cast<std::size_t>(i - 1)]))
      throw InputError("spline knots must be strictly increasing");

  std::vector<double> h(static_cast<std::size_t>(k - 1));
  for (int i = 0; i + 1 < k; ++i)
    h[static_cast<std::size_t>(i)] = knots_[static_cast<std::size_t>(i + 1)] - knots_[static_cast<std::size_t>(i)];

  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(k - 2, k);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(k - 2, k - 2);
  for (int i = 0; i + 2 < k; ++i) {
    const double h0 = h[static_cast<std::size_t>(i)];
    const double h1 = h[static_cast<std::size_t>(i + 1)];
    d(i, i) = 1.0 / h0;
    d(i, i + 1) = -1.0 / h0 - 1.0 / h1;
    d(i, i + 2) = 1.0 / h1;
    b(i, i) = (h0 + h1) / 3.0;
    if (i + 3 < k) {
      b(i, i + 1) = h1 / 6.0;
      b(i + 1, i) = h1 / 6.0;
    }
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(b);
  const Eigen::MatrixXd f = llt.solve(d);  // interior second derivatives
  second_derivs_ = Eigen::MatrixXd::Zero(k, k);
  second_derivs_.middleRows(1, k - 2) = f;
  penalty_ = d.transpose() * f;
  penalty_ = 0.5 * (penalty_ + penalty_.transpose());
}

CubicRegressionSpline CubicRegressionSpline::at_quantiles(std::span<const double> x, int k) {
  std::vector<double> u(x.begin(), x.end());
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  const int kk = std::min<int>(k, static_cast<int>(u.size()));
  if (kk < 3) throw InputError("smooth term needs at least 3 distinct covariate values");
  std::vector<double> knots;
  knots.reserve(static_cast<std::size_t>(kk));
  const double last = static_cast<double>(u.size() - 1);
  for (int j = 0; j < kk; ++j) {
    const double pos = last * j / (kk - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, u.size() - 1);
    const double w = pos - static_cast<double>(lo);
    const double q = (1.0 - w) * u[lo] + w * u[hi];
    if (knots.empty() || q > knots.back()) knots.push_back(q);
  }
  return CubicRegressionSpline(std::move(knots));
}

Eigen::RowVectorXd CubicRegressionSpline::basis_row(double x) const {
  const int k = size();
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(k);
  const auto& kn = knots_;

  if (x < kn.front() || x > kn.back()) {
    // Linear continuation using the boundary value and slope (f'' = 0 there).
    const bool left = x < kn.front();
    const int j = left ? 0 : k - 2;
    const double hj = kn[static_cast<std::size_t>(j + 1)] - kn[static_cast<std::size_t>(j)];
    // f'(x_j) = (b_{j+1}-b_j)/h - h(2 d_j + d_{j+1})/6 ; f'(x_{j+1}) = (b_{j+1}-b_j)/h + h(d_j + 2 d_{j+1})/6
    Eigen::RowVectorXd slope = Eigen::RowVectorXd::Zero(k);
    slope(j) -= 1.0 / hj;
    slope(j + 1) += 1.0 / hj;
    if (left) {
      slope -= hj / 6.0 * (2.0 * second_derivs_.row(j) + second_derivs_.row(j + 1));
      row(0) = 1.0;
      row += (x - kn.front()) * slope;
    } else {
      slope += hj / 6.0 * (second_derivs_.row(j) + 2.0 * second_derivs_.row(j + 1));
      row(k - 1) = 1.0;
      row += (x - kn.back()) * slope;
    }
    return row;
  }

  const auto it = std::upper_bound(kn.begin(), kn.end(), x);
  int j = static_cast<int>(it - kn.begin()) - 1;
  j = std::clamp(j, 0, k - 2);
  const double xl = kn[static_cast<std::size_t>(j)];
  const double xr = kn[static_cast<std::size_t>(j + 1)];
  const double hj = xr - xl;
  const double am = (xr - x) / hj;
  const double ap = (x - xl) / hj;
  const double cm = ((xr - x) * (xr - x) * (xr - x) / hj - hj * (xr - x)) / 6.0;
  const double cp = ((x - xl) * (x - xl) * (x - xl) / hj - hj * (x - xl)) / 6.0;
  row(j) += am;
  row(j + 1) += ap;
  row += cm * second_derivs_.row(j) + cp * second_derivs_.row(j + 1);
  return row;
}

Eigen::MatrixXd CubicRegressionSpline::basis(std::span<const double> x) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(x.size()), size());
  for (std::size_t i = 0; i < x.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = basis_row(x[i]);
  return out;
}

CenteringConstraint CenteringConstraint::from_basis(const Eigen::MatrixXd& basis) {
  const Eigen::VectorXd c = basis.colwise().sum().transpose();
  const Eigen::Index k = c.size();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
  return {q.rightCols(k - 1)};
}

Eigen::MatrixXd row_kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows()) throw InputError("row_kronecker: row counts differ");
  Eigen::MatrixXd out(a.rows(), a.cols() * b.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    out.middleCols(j * b.cols(), b.cols()) = b.array().colwise() * a.col(j).array();
  return out;
}

}  // namespace cureweib
