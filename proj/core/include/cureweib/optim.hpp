#pragma once

#include <Eigen/Core>

#include <functional>
#include <optional>

namespace cureweib {

// Unconstrained minimization problem. The objective may return +inf outside
// the region where it is defined; optimizers treat that as "reject this point".
struct OptimProblem {
  Eigen::Index dimension = 0;
  std::function<double(const Eigen::VectorXd&)> objective;
  // Optional analytic gradient. When empty, BFGS falls back to central
  // differences with step 1e-6 * (1 + |x_i|).
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

struct OptimResult {
  Eigen::VectorXd argmin;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::optional<Eigen::MatrixXd> approx_hessian;   // BFGS only
  std::optional<Eigen::MatrixXd> inverse_hessian;  // BFGS only
};

struct BfgsOptions {
  double tol_grad = 1e-6;  // on the infinity norm of the gradient
  int max_iter = 200;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
};

struct NelderMeadOptions {
  double tol_size = 1e-8;   // simplex diameter (max distance from best vertex)
  int max_iter = 1000;
  int max_evaluations = 0;  // 0 = unlimited
};

OptimResult minimize_bfgs(const OptimProblem& problem, const Eigen::VectorXd& x0,
                          const BfgsOptions& options = {});
OptimResult minimize_bfgs(const OptimProblem& problem, const Eigen::VectorXd& x0, double tol_grad,
                          int max_iter);

// Coefficients: reflection 1, expansion 2, contraction 0.5, shrink 0.5. The
// initial simplex is x0 plus vertices offset by 0.05 * (1 + |x0_i|) per axis.
OptimResult minimize_nelder_mead(const OptimProblem& problem, const Eigen::VectorXd& x0,
                                 const NelderMeadOptions& options = {});
OptimResult minimize_nelder_mead(const OptimProblem& problem, const Eigen::VectorXd& x0,
                                 double tol_size, int max_iter);

Eigen::VectorXd central_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                            const Eigen::VectorXd& x);

}  // namespace cureweib
