#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <vector>

namespace cureweib {

// A penalty acting on the coefficient block [start, start + matrix.rows()).
struct Penalty {
  Eigen::Index start = 0;
  Eigen::MatrixXd matrix;
};

// A group of coefficients reported together (one smooth term).
struct CoefficientBlock {
  Eigen::Index start = 0;
  Eigen::Index width = 0;
};

struct PirlsOptions {
  int max_iter = 100;
  double tol = 1e-10;  // relative change of the penalized objective
};

struct PirlsResult {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd influence_diagonal;  // diag of (X'WX + S)^{-1} X'WX
  double penalized_objective = 0.0;    // -sum loglik + 0.5 b'S b
  double cross_entropy = 0.0;          // -H at the returned coefficients
  int iterations = 0;
  bool converged = false;
};

// Assembles sum_j lambda_j S_j as a p x p matrix.
Eigen::MatrixXd total_penalty(std::span<const Penalty> penalties, std::span<const double> lambdas,
                              Eigen::Index p);

// Penalized iteratively reweighted least squares for a logistic model with
// fractional responses u in [0,1], at fixed smoothing parameters.
PirlsResult fit_additive_pirls(const Eigen::MatrixXd& x, std::span<const Penalty> penalties,
                               const Eigen::VectorXd& u, std::span<const double> lambdas,
                               const Eigen::VectorXd* warm_start = nullptr,
                               const PirlsOptions& options = {});

// Effective degrees of freedom of each block from an influence diagonal.
std::vector<double> block_edf(const Eigen::VectorXd& influence_diagonal,
                              std::span<const CoefficientBlock> blocks);

struct GcvOptions {
  std::vector<double> grid;  // candidate smoothing values; empty = default grid
  int max_sweeps = 4;
  int max_outer = 30;
  double tol = 1e-7;

  // 13 log-spaced points over [1e-4, 1e4].
  static std::vector<double> default_grid();
};

struct GcvResult {
  std::vector<double> lambdas;
  double score = 0.0;
  int outer_iterations = 0;
};

// GCV score n * D / (n - edf)^2 of the penalized working model; D is the
// weighted residual sum of squares of the working response.
double gcv_score(const Eigen::MatrixXd& xtwx, const Eigen::VectorXd& xtwz, const Eigen::MatrixXd& x,
                 const Eigen::VectorXd& w, const Eigen::VectorXd& z, const Eigen::MatrixXd& penalty);

// Coordinate-wise grid search of the GCV score, re-run on the working model
// of each outer penalized IRLS step until the smoothing parameters settle.
// Throws FitError when every candidate score is non-finite.
GcvResult select_smoothing_gcv(const Eigen::MatrixXd& x, std::span<const Penalty> penalties,
                               const Eigen::VectorXd& u, const GcvOptions& options = {},
                               std::span<const double> initial = {},
                               const Eigen::VectorXd* warm_start = nullptr);

}  // namespace cureweib
