#pragma once

#include "cureweib/additive.hpp"
#include "cureweib/neural_net.hpp"
#include "cureweib/spline.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cureweib {

enum class LearnerKind { glm_logit, additive, neural_net };

std::string_view to_string(LearnerKind kind);
// Accepts glm_logit/glm, additive/gam, neural_net/nnet.
LearnerKind parse_learner_kind(std::string_view name);

struct NeuralNetOptions {
  int hidden_units = 4;
  double weight_decay = 1e-4;
  std::uint64_t seed = 1;
  int restarts = 1;
  int max_iter = 200;
  double tol_grad = 1e-6;
};

struct AdditiveOptions {
  int k_univ = 10;
  int k_tensor = 5;
  bool gcv = true;
  double lambda = 1.0;  // used for every penalty when gcv is off
  bool smooths = true;  // false: every covariate enters linearly
  bool interactions = true;
};

struct CureLearnerSpec {
  LearnerKind kind = LearnerKind::glm_logit;
  NeuralNetOptions nnet;
  AdditiveOptions additive;

  // Throws InputError on out-of-range settings.
  void validate() const;
};

// Design rows y_i (first column the intercept) and posterior responses u_i.
struct FractionalResponseSet {
  Eigen::MatrixXd design;
  Eigen::VectorXd response;
};

struct GlmState {
  Eigen::VectorXd coefficients;
};

struct NeuralNetState {
  NeuralNetWeights weights;
  double weight_decay = 0.0;
};

struct SmoothTerm {
  enum class Kind { univariate, tensor };
  Kind kind = Kind::univariate;
  std::vector<int> columns;                      // design columns (1 or 2)
  std::vector<CubicRegressionSpline> margins;
  std::vector<Eigen::MatrixXd> constraints;      // centering Z per margin
  CoefficientBlock block;
  double edf = 0.0;
};

struct AdditiveModelState {
  std::vector<int> parametric_columns;  // includes the intercept column 0
  std::vector<SmoothTerm> smooths;
  std::vector<Penalty> penalties;       // already scaled
  std::vector<double> penalty_scale;
  std::vector<double> lambdas;          // one per penalty
  Eigen::VectorXd coefficients;         // parametric first, then smooth blocks
};

struct LearnerState {
  LearnerKind kind = LearnerKind::glm_logit;
  std::variant<GlmState, AdditiveModelState, NeuralNetState> model;
  Eigen::Index input_dim = 0;  // q + 1
  bool fitted = false;
  bool converged = false;
  double objective = 0.0;  // -H on the training responses at fit time
};

// Weighted cross-entropy -H = sum u log(theta) + (1-u) log(1-theta), with theta
// clipped to [1e-8, 1 - 1e-8].
double cross_entropy(const Eigen::VectorXd& u, const Eigen::VectorXd& theta);

// Fits a learner to fractional responses. With a warm start the returned
// state never has lower -H on `data` than the warm start itself.
LearnerState fit_learner(const CureLearnerSpec& spec, const FractionalResponseSet& data,
                         const LearnerState* warm_start = nullptr);

// Clipped into [1e-8, 1 - 1e-8].
double predict_theta(const LearnerState& state, const Eigen::Ref<const Eigen::VectorXd>& y);
Eigen::VectorXd predict_thetas(const LearnerState& state, const Eigen::MatrixXd& design);

// glm: q+1; neural net: H+1; additive: parametric columns + sum of smooth edf.
double learner_degrees_of_freedom(const LearnerState& state);

// Additive-model design for the training rows (builds knots and constraints).
AdditiveModelState build_additive_structure(const Eigen::MatrixXd& design, const AdditiveOptions& options);
Eigen::MatrixXd additive_design_matrix(const AdditiveModelState& state, const Eigen::MatrixXd& design);

}  // namespace cureweib
