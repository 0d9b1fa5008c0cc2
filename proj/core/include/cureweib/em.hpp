#pragma once

#include "cureweib/learners.hpp"
#include "cureweib/lifetable.hpp"
#include "cureweib/survival.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cureweib {

struct EmConfig {
  double epsilon = 1e-6;  // absolute change of the observed log-likelihood
  int max_iter = 500;
  CureLearnerSpec learner;
  std::uint64_t seed = 1;  // overrides learner.nnet.seed
  std::optional<Eigen::VectorXd> gamma0;
  std::optional<Eigen::VectorXd> xi0;
  int nm_evals_per_dim = 200;  // Nelder-Mead budget per Weibull M-step
  double nm_tol = 1e-10;
  bool standardize = true;

  void validate() const;
};

// Affine column scaling (x - center) / scale. Intercept and binary columns keep
// center 0 and scale 1.
struct ColumnScaling {
  Eigen::VectorXd center;
  Eigen::VectorXd scale;

  static ColumnScaling identity(Eigen::Index columns);
  // Standardizes every column with more than two distinct values (sample sd).
  static ColumnScaling fit(const Eigen::MatrixXd& design);
  Eigen::VectorXd apply(const Eigen::VectorXd& row) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& design) const;
  friend bool operator==(const ColumnScaling&, const ColumnScaling&) = default;
};

struct Standardization {
  ColumnScaling survival;
  ColumnScaling cure;
};

struct PosteriorVector {
  Eigen::VectorXd u;
};

struct FittedCureModel {
  LearnerState learner;
  WeibullRegression regression;
  PosteriorVector posterior;
  std::vector<double> trace;  // observed log-likelihood, entry 0 at the initial guess
  bool converged = false;
  int iterations = 0;
  std::vector<int> weibull_unconverged;  // iterations whose simplex ran out of budget
  Standardization scaling;
  EmConfig config;
  std::size_t n = 0;

  double log_likelihood() const { return trace.empty() ? 0.0 : trace.back(); }
};

Eigen::MatrixXd survival_design(std::span<const PatientRecord> records);
Eigen::MatrixXd cure_design(std::span<const PatientRecord> records);
// Copies of the records with covariates mapped through the scaling.
std::vector<PatientRecord> standardize_records(std::span<const PatientRecord> records,
                                               const Standardization& scaling);

// Posterior cure probabilities; records carry covariates on the model scale.
PosteriorVector e_step(std::span<const PatientRecord> records, std::span<const BackgroundAtTime> backgrounds,
                       const LearnerState& learner, const WeibullRegression& reg);

LearnerState m_step_learner(const PosteriorVector& posterior, const Eigen::MatrixXd& cure_design,
                            const CureLearnerSpec& spec, const LearnerState* warm);

// sum_i (1 - u_i) [log S_D(t_i) + delta_i log(h0_i + h_D(t_i))]; -inf where
// the Weibull parameters overflow.
double weibull_objective(const PosteriorVector& posterior, std::span<const PatientRecord> records,
                         std::span<const BackgroundAtTime> backgrounds, const WeibullRegression& reg);

struct WeibullStep {
  WeibullRegression regression;
  double objective = 0.0;
  bool converged = false;
};

// Nelder-Mead on the objective above, warm-started at reg0; never returns a
// point worse than reg0.
WeibullStep m_step_weibull(const PosteriorVector& posterior, std::span<const PatientRecord> records,
                           std::span<const BackgroundAtTime> backgrounds, const WeibullRegression& reg0,
                           int max_evaluations, double tol_size = 1e-10);

// Default starting values: intercept -log(mean event time), shape 1.
WeibullRegression initial_regression(std::span<const PatientRecord> records);

FittedCureModel fit_em(std::span<const PatientRecord> records, std::span<const BackgroundAtTime> backgrounds,
                       const EmConfig& config);
FittedCureModel fit_em(std::span<const PatientRecord> records, const BackgroundModel& background,
                       const EmConfig& config);
FittedCureModel fit_em(std::span<const PatientRecord> records, const LifeTable& table, const EmConfig& config);

// Evaluation on records with raw (unstandardized) covariates.
double predict_cure_probability(const FittedCureModel& model, const PatientRecord& record);
WeibullParams predict_weibull(const FittedCureModel& model, const PatientRecord& record);
double model_log_likelihood(const FittedCureModel& model, std::span<const PatientRecord> records,
                            std::span<const BackgroundAtTime> backgrounds);

}  // namespace cureweib
