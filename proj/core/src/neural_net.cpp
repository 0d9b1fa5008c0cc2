#include "cureweib/neural_net.hpp"

#include "cureweib/error.hpp"
#include "cureweib/learners.hpp"
#include "cureweib/numeric.hpp"

#include <random>

namespace cureweib {

Eigen::VectorXd pack(const NeuralNetWeights& w) {
  Eigen::VectorXd v(w.parameter_count());
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < w.hidden.rows(); ++r)
    for (Eigen::Index c = 0; c < w.hidden.cols(); ++c) v[k++] = w.hidden(r, c);
  v.segment(k, w.output.size()) = w.output;
  k += w.output.size();
  v[k] = w.output_bias;
  return v;
}

NeuralNetWeights unpack(const Eigen::VectorXd& v, int hidden_units, Eigen::Index inputs) {
  NeuralNetWeights w;
  if (v.size() != hidden_units * inputs + hidden_units + 1)
    throw InputError("neural net parameter vector has wrong length");
  w.hidden.resize(hidden_units, inputs);
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < hidden_units; ++r)
    for (Eigen::Index c = 0; c < inputs; ++c) w.hidden(r, c) = v[k++];
  w.output = v.segment(k, hidden_units);
  w.output_bias = v[k + hidden_units];
  return w;
}

NeuralNetWeights random_weights(int hidden_units, Eigen::Index inputs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  NeuralNetWeights w;
  w.hidden.resize(hidden_units, inputs);
  for (Eigen::Index r = 0; r < w.hidden.rows(); ++r)
    for (Eigen::Index c = 0; c < w.hidden.cols(); ++c) w.hidden(r, c) = unif(rng);
  w.output.resize(hidden_units);
  for (Eigen::Index k = 0; k < hidden_units; ++k) w.output[k] = unif(rng);
  w.output_bias = unif(rng);
  return w;
}

double nn_linear_predictor(const NeuralNetWeights& w, const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (y.size() != w.inputs()) throw InputError("neural net input has wrong dimension");
  double eta = w.output_bias;
  for (Eigen::Index k = 0; k < w.hidden.rows(); ++k) eta += w.output[k] * logistic(w.hidden.row(k).dot(y));
  return eta;
}

double nn_objective(const NeuralNetWeights& w, const FractionalResponseSet& data, double weight_decay) {
  const Eigen::MatrixXd hidden = (data.design * w.hidden.transpose()).unaryExpr([](double a) { return logistic(a); });
  const Eigen::VectorXd eta = (hidden * w.output).array() + w.output_bias;
  CompensatedSum s;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double u = data.response[i];
    s.add(u * softplus(-eta[i]) + (1.0 - u) * softplus(eta[i]));
  }
  return s.value() + weight_decay * pack(w).squaredNorm();
}

Eigen::VectorXd nn_gradient(const NeuralNetWeights& w, const FractionalResponseSet& data, double weight_decay) {
  const Eigen::MatrixXd hidden = (data.design * w.hidden.transpose()).unaryExpr([](double a) { return logistic(a); });
  const Eigen::VectorXd eta = (hidden * w.output).array() + w.output_bias;
  Eigen::VectorXd residual(eta.size());  // d(objective)/d(eta) = theta - u
  for (Eigen::Index i = 0; i < eta.size(); ++i) residual[i] = logistic(eta[i]) - data.response[i];

  NeuralNetWeights g;
  g.output = hidden.transpose() * residual;
  g.output_bias = residual.sum();
  // d eta / d a_k = c_k h_k (1 - h_k) y
  const Eigen::MatrixXd delta =
      (hidden.array() * (1.0 - hidden.array())).matrix() * w.output.asDiagonal();
  g.hidden = (delta.array().colwise() * residual.array()).matrix().transpose() * data.design;
  return pack(g) + 2.0 * weight_decay * pack(w);
}

}  // namespace cureweib
