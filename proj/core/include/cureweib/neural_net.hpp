#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace cureweib {

struct FractionalResponseSet;

// theta(y) = sigma( sum_k c_k sigma(a_k' y) + c_0 ), sigma logistic.
struct NeuralNetWeights {
  Eigen::MatrixXd hidden;  // H x (q+1), rows a_k
  Eigen::VectorXd output;  // H, c_k
  double output_bias = 0.0;

  int hidden_units() const { return static_cast<int>(hidden.rows()); }
  Eigen::Index inputs() const { return hidden.cols(); }
  Eigen::Index parameter_count() const { return hidden.size() + output.size() + 1; }
};

Eigen::VectorXd pack(const NeuralNetWeights& w);
NeuralNetWeights unpack(const Eigen::VectorXd& v, int hidden_units, Eigen::Index inputs);

// Uniform(-0.5, 0.5) initial weights from `seed`.
NeuralNetWeights random_weights(int hidden_units, Eigen::Index inputs, std::uint64_t seed);

// Output-layer linear predictor (logit of theta).
double nn_linear_predictor(const NeuralNetWeights& w, const Eigen::Ref<const Eigen::VectorXd>& y);

// Minimization objective: cross-entropy -(-H) plus weight_decay * |w|^2 over
// all weights and biases.
double nn_objective(const NeuralNetWeights& w, const FractionalResponseSet& data, double weight_decay);

// Exact backpropagation gradient of nn_objective, packed like pack().
Eigen::VectorXd nn_gradient(const NeuralNetWeights& w, const FractionalResponseSet& data,
                            double weight_decay);

}  // namespace cureweib
