#include "cureweib/learners.hpp"

#include "cureweib/error.hpp"
#include "cureweib/numeric.hpp"
#include "cureweib/optim.hpp"
#include "cureweib/parallel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace cureweib {

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::glm_logit: return "glm_logit";
    case LearnerKind::additive: return "additive";
    case LearnerKind::neural_net: return "neural_net";
  }
  return "unknown";
}

LearnerKind parse_learner_kind(std::string_view name) {
  if (name == "glm" || name == "glm_logit") return LearnerKind::glm_logit;
  if (name == "gam" || name == "additive") return LearnerKind::additive;
  if (name == "nnet" || name == "neural_net") return LearnerKind::neural_net;
  throw InputError("unknown learner '" + std::string(name) + "' (expected glm, gam or nnet)");
}

void CureLearnerSpec::validate() const {
  if (nnet.hidden_units < 1 || nnet.hidden_units > 64) throw InputError("hidden units must be in [1, 64]");
  if (!(nnet.weight_decay >= 0.0)) throw InputError("weight decay must be >= 0");
  if (nnet.restarts < 1) throw InputError("restarts must be >= 1");
  if (additive.k_univ < 3 || additive.k_tensor < 3) throw InputError("basis dimensions must be >= 3");
  if (!(additive.lambda >= 0.0)) throw InputError("smoothing parameter must be >= 0");
}

double cross_entropy(const Eigen::VectorXd& u, const Eigen::VectorXd& theta) {
  if (u.size() != theta.size()) throw InputError("cross_entropy: size mismatch");
  CompensatedSum s;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double th = clip_probability(theta[i]);
    s.add(u[i] * std::log(th) + (1.0 - u[i]) * std::log1p(-th));
  }
  return s.value();
}

namespace {

void check_data(const FractionalResponseSet& data) {
  if (data.design.rows() < 1) throw InputError("learner data must have at least one row");
  if (data.design.rows() != data.response.size()) throw InputError("learner design/response size mismatch");
  if (!data.design.allFinite() || !data.response.allFinite())
    throw InputError("learner data contains NaN or infinite values");
  if ((data.response.array() < 0.0).any() || (data.response.array() > 1.0).any())
    throw InputError("learner responses must lie in [0, 1]");
}

// ---------------------------------------------------------------- glm_logit

void require_full_rank(const Eigen::MatrixXd& design) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  if (rank == design.cols()) return;
  std::ostringstream msg;
  msg << "rank-deficient cure design (rank " << rank << " of " << design.cols()
      << "); collinear columns:";
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = rank; j < design.cols(); ++j) cols.push_back(qr.colsPermutation().indices()[j]);
  std::sort(cols.begin(), cols.end());
  for (auto c : cols) msg << ' ' << c;
  throw InputError(msg.str());
}

double glm_negative_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& u) {
  CompensatedSum s;
  for (Eigen::Index i = 0; i < eta.size(); ++i) s.add(u[i] * softplus(-eta[i]) + (1.0 - u[i]) * softplus(eta[i]));
  return s.value();
}

GlmState fit_glm(const FractionalResponseSet& data, const GlmState* warm, bool& converged) {
  const auto& y = data.design;
  const auto& u = data.response;
  require_full_rank(y);
  Eigen::VectorXd beta = (warm && warm->coefficients.size() == y.cols())
                             ? warm->coefficients
                             : Eigen::VectorXd::Zero(y.cols());
  Eigen::VectorXd eta = y * beta;
  double objective = glm_negative_loglik(eta, u);
  converged = false;
  const double tol = 1e-10 * std::max<double>(1.0, static_cast<double>(y.rows()));
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd mu(eta.size()), w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      mu[i] = logistic(eta[i]);
      w[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-12);
    }
    const Eigen::VectorXd score = y.transpose() * (u - mu);
    if (score.lpNorm<Eigen::Infinity>() <= tol) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd info = y.transpose() * (y.array().colwise() * w.array()).matrix();
    const Eigen::VectorXd step = info.ldlt().solve(score);
    double t = 1.0;
    Eigen::VectorXd trial = beta + step;
    Eigen::VectorXd eta_trial = y * trial;
    double obj_trial = glm_negative_loglik(eta_trial, u);
    for (int h = 0; h < 40 && !(obj_trial <= objective); ++h) {
      t *= 0.5;
      trial = beta + t * step;
      eta_trial = y * trial;
      obj_trial = glm_negative_loglik(eta_trial, u);
    }
    if (!(obj_trial <= objective)) {
      converged = true;  // at machine precision
      break;
    }
    beta = trial;
    eta = eta_trial;
    objective = obj_trial;
  }
  return {beta};
}

// ----------------------------------------------------------------- additive

int distinct_up_to(const Eigen::VectorXd& v, int cap) {
  std::set<double> seen;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    seen.insert(v[i]);
    if (static_cast<int>(seen.size()) >= cap) break;
  }
  return static_cast<int>(seen.size());
}

std::span<const double> column_span(const Eigen::MatrixXd& m, Eigen::Index c) {
  return {m.col(c).data(), static_cast<std::size_t>(m.rows())};
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Eigen::MatrixXd smooth_block(const SmoothTerm& term, const Eigen::MatrixXd& design) {
  if (term.kind == SmoothTerm::Kind::univariate) {
    const auto c = term.columns[0];
    return term.margins[0].basis(column_span(design, c)) * term.constraints[0];
  }
  const Eigen::MatrixXd a = term.margins[0].basis(column_span(design, term.columns[0])) * term.constraints[0];
  const Eigen::MatrixXd b = term.margins[1].basis(column_span(design, term.columns[1])) * term.constraints[1];
  return row_kronecker(a, b);
}

double scale_for(const Eigen::MatrixXd& block, const Eigen::MatrixXd& penalty) {
  const double pn = penalty.norm();
  if (!(pn > 0.0)) return 1.0;
  return (block.transpose() * block).norm() / pn;
}

AdditiveModelState fit_additive(const AdditiveOptions& opts, const FractionalResponseSet& data,
                                const AdditiveModelState* warm, bool& converged) {
  AdditiveModelState state = warm ? *warm : build_additive_structure(data.design, opts);
  const Eigen::MatrixXd x = additive_design_matrix(state, data.design);
  const Eigen::VectorXd* start =
      (warm && warm->coefficients.size() == x.cols()) ? &warm->coefficients : nullptr;

  std::vector<double> lambdas(state.penalties.size(), opts.lambda);
  if (opts.gcv && !state.penalties.empty()) {
    const std::span<const double> initial =
        state.lambdas.size() == state.penalties.size() ? std::span<const double>(state.lambdas)
                                                       : std::span<const double>{};
    lambdas = select_smoothing_gcv(x, state.penalties, data.response, {}, initial, start).lambdas;
  }
  const PirlsResult fit = fit_additive_pirls(x, state.penalties, data.response, lambdas, start);
  converged = fit.converged;
  state.lambdas = lambdas;
  state.coefficients = fit.coefficients;
  for (auto& term : state.smooths)
    term.edf = fit.influence_diagonal.segment(term.block.start, term.block.width).sum();
  return state;
}

// ---------------------------------------------------------------- neural_net

NeuralNetState fit_neural_net(const NeuralNetOptions& opts, const FractionalResponseSet& data,
                              const NeuralNetState* warm, bool& converged) {
  const int h = opts.hidden_units;
  const Eigen::Index inputs = data.design.cols();
  OptimProblem problem;
  problem.dimension = h * inputs + h + 1;
  problem.objective = [&](const Eigen::VectorXd& v) {
    return nn_objective(unpack(v, h, inputs), data, opts.weight_decay);
  };
  problem.gradient = [&](const Eigen::VectorXd& v) {
    return nn_gradient(unpack(v, h, inputs), data, opts.weight_decay);
  };
  BfgsOptions bfgs;
  bfgs.tol_grad = opts.tol_grad;
  bfgs.max_iter = opts.max_iter;

  std::vector<Eigen::VectorXd> starts;
  if (warm && warm->weights.hidden_units() == h && warm->weights.inputs() == inputs) {
    starts.push_back(pack(warm->weights));
  } else {
    for (int r = 0; r < opts.restarts; ++r) {
      const std::uint64_t seed = r == 0 ? opts.seed : derive_seed(opts.seed, static_cast<std::uint64_t>(r));
      starts.push_back(pack(random_weights(h, inputs, seed)));
    }
  }

  OptimResult best;
  bool have = false;
  for (const auto& x0 : starts) {
    OptimResult r = minimize_bfgs(problem, x0, bfgs);
    if (!have || r.value < best.value) {
      best = std::move(r);
      have = true;
    }
  }
  converged = best.converged;
  return {unpack(best.argmin, h, inputs), opts.weight_decay};
}

Eigen::RowVectorXd additive_row(const AdditiveModelState& state, const Eigen::Ref<const Eigen::VectorXd>& y) {
  Eigen::RowVectorXd row(state.coefficients.size());
  Eigen::Index k = 0;
  for (int c : state.parametric_columns) row[k++] = y[c];
  for (const auto& term : state.smooths) {
    if (term.kind == SmoothTerm::Kind::univariate) {
      row.segment(k, term.block.width) = term.margins[0].basis_row(y[term.columns[0]]) * term.constraints[0];
    } else {
      const Eigen::RowVectorXd a = term.margins[0].basis_row(y[term.columns[0]]) * term.constraints[0];
      const Eigen::RowVectorXd b = term.margins[1].basis_row(y[term.columns[1]]) * term.constraints[1];
      for (Eigen::Index i = 0; i < a.size(); ++i) row.segment(k + i * b.size(), b.size()) = a[i] * b;
    }
    k += term.block.width;
  }
  return row;
}

double linear_predictor(const LearnerState& state, const Eigen::Ref<const Eigen::VectorXd>& y) {
  switch (state.kind) {
    case LearnerKind::glm_logit: return y.dot(std::get<GlmState>(state.model).coefficients);
    case LearnerKind::additive: {
      const auto& a = std::get<AdditiveModelState>(state.model);
      return additive_row(a, y).dot(a.coefficients);
    }
    case LearnerKind::neural_net: return nn_linear_predictor(std::get<NeuralNetState>(state.model).weights, y);
  }
  return 0.0;
}

}  // namespace

AdditiveModelState build_additive_structure(const Eigen::MatrixXd& design, const AdditiveOptions& options) {
  AdditiveModelState state;
  std::vector<int> continuous;
  state.parametric_columns.push_back(0);
  for (Eigen::Index c = 1; c < design.cols(); ++c) {
    if (options.smooths && distinct_up_to(design.col(c), 3) >= 3)
      continuous.push_back(static_cast<int>(c));
    else
      state.parametric_columns.push_back(static_cast<int>(c));
  }

  Eigen::Index offset = static_cast<Eigen::Index>(state.parametric_columns.size());
  std::vector<Eigen::MatrixXd> blocks;
  for (int c : continuous) {
    SmoothTerm term;
    term.kind = SmoothTerm::Kind::univariate;
    term.columns = {c};
    term.margins.push_back(CubicRegressionSpline::at_quantiles(column_span(design, c), options.k_univ));
    const Eigen::MatrixXd basis = term.margins[0].basis(column_span(design, c));
    term.constraints.push_back(CenteringConstraint::from_basis(basis).z);
    const Eigen::MatrixXd& z = term.constraints[0];
    term.block = {offset, z.cols()};
    const Eigen::MatrixXd block = basis * z;
    const Eigen::MatrixXd pen = z.transpose() * term.margins[0].penalty() * z;
    const double scale = scale_for(block, pen);
    state.penalties.push_back({offset, scale * pen});
    state.penalty_scale.push_back(scale);
    offset += z.cols();
    state.smooths.push_back(std::move(term));
  }
  if (options.interactions) {
    for (std::size_t i = 0; i < continuous.size(); ++i) {
      for (std::size_t j = i + 1; j < continuous.size(); ++j) {
        SmoothTerm term;
        term.kind = SmoothTerm::Kind::tensor;
        term.columns = {continuous[i], continuous[j]};
        std::vector<Eigen::MatrixXd> marginal_pen;
        for (int c : term.columns) {
          auto spline = CubicRegressionSpline::at_quantiles(column_span(design, c), options.k_tensor);
          const Eigen::MatrixXd basis = spline.basis(column_span(design, c));
          const Eigen::MatrixXd z = CenteringConstraint::from_basis(basis).z;
          marginal_pen.push_back(z.transpose() * spline.penalty() * z);
          term.margins.push_back(std::move(spline));
          term.constraints.push_back(z);
        }
        const Eigen::Index wa = term.constraints[0].cols();
        const Eigen::Index wb = term.constraints[1].cols();
        term.block = {offset, wa * wb};
        const Eigen::MatrixXd block = smooth_block(term, design);
        const Eigen::MatrixXd pa = kron(marginal_pen[0], Eigen::MatrixXd::Identity(wb, wb));
        const Eigen::MatrixXd pb = kron(Eigen::MatrixXd::Identity(wa, wa), marginal_pen[1]);
        for (const auto* pen : {&pa, &pb}) {
          const double scale = scale_for(block, *pen);
          state.penalties.push_back({offset, scale * *pen});
          state.penalty_scale.push_back(scale);
        }
        offset += wa * wb;
        state.smooths.push_back(std::move(term));
      }
    }
  }
  state.coefficients = Eigen::VectorXd::Zero(offset);
  return state;
}

Eigen::MatrixXd additive_design_matrix(const AdditiveModelState& state, const Eigen::MatrixXd& design) {
  Eigen::MatrixXd x(design.rows(), state.coefficients.size());
  Eigen::Index k = 0;
  for (int c : state.parametric_columns) x.col(k++) = design.col(c);
  for (const auto& term : state.smooths) {
    x.middleCols(term.block.start, term.block.width) = smooth_block(term, design);
  }
  return x;
}

LearnerState fit_learner(const CureLearnerSpec& spec, const FractionalResponseSet& data,
                         const LearnerState* warm_start) {
  spec.validate();
  check_data(data);
  const LearnerState* warm =
      (warm_start && warm_start->fitted && warm_start->kind == spec.kind &&
       warm_start->input_dim == data.design.cols())
          ? warm_start
          : nullptr;

  LearnerState state;
  state.kind = spec.kind;
  state.input_dim = data.design.cols();
  bool converged = false;
  switch (spec.kind) {
    case LearnerKind::glm_logit:
      state.model = fit_glm(data, warm ? &std::get<GlmState>(warm->model) : nullptr, converged);
      break;
    case LearnerKind::additive:
      state.model = fit_additive(spec.additive, data,
                                 warm ? &std::get<AdditiveModelState>(warm->model) : nullptr, converged);
      break;
    case LearnerKind::neural_net:
      state.model = fit_neural_net(spec.nnet, data, warm ? &std::get<NeuralNetState>(warm->model) : nullptr,
                                   converged);
      break;
  }
  state.fitted = true;
  state.converged = converged;
  state.objective = cross_entropy(data.response, predict_thetas(state, data.design));

  if (warm) {
    const double incumbent = cross_entropy(data.response, predict_thetas(*warm, data.design));
    if (state.objective < incumbent) {
      LearnerState kept = *warm;
      kept.objective = incumbent;
      return kept;
    }
  }
  return state;
}

double predict_theta(const LearnerState& state, const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (!state.fitted) throw InputError("learner is not fitted");
  if (y.size() != state.input_dim)
    throw InputError("cure covariate dimension " + std::to_string(y.size()) + " does not match learner input " +
                     std::to_string(state.input_dim));
  return clip_probability(logistic(linear_predictor(state, y)));
}

Eigen::VectorXd predict_thetas(const LearnerState& state, const Eigen::MatrixXd& design) {
  if (!state.fitted) throw InputError("learner is not fitted");
  if (design.cols() != state.input_dim)
    throw InputError("cure design has " + std::to_string(design.cols()) + " columns, learner expects " +
                     std::to_string(state.input_dim));
  Eigen::VectorXd eta;
  switch (state.kind) {
    case LearnerKind::glm_logit:
      eta = design * std::get<GlmState>(state.model).coefficients;
      break;
    case LearnerKind::additive: {
      const auto& a = std::get<AdditiveModelState>(state.model);
      eta = additive_design_matrix(a, design) * a.coefficients;
      break;
    }
    case LearnerKind::neural_net: {
      const auto& w = std::get<NeuralNetState>(state.model).weights;
      const Eigen::MatrixXd hidden =
          (design * w.hidden.transpose()).unaryExpr([](double a) { return logistic(a); });
      eta = (hidden * w.output).array() + w.output_bias;
      break;
    }
  }
  return eta.unaryExpr([](double e) { return clip_probability(logistic(e)); });
}

double learner_degrees_of_freedom(const LearnerState& state) {
  if (!state.fitted) throw InputError("degrees of freedom requested for an unfitted learner");
  switch (state.kind) {
    case LearnerKind::glm_logit: return static_cast<double>(state.input_dim);
    case LearnerKind::neural_net:
      return static_cast<double>(std::get<NeuralNetState>(state.model).weights.hidden_units() + 1);
    case LearnerKind::additive: {
      const auto& a = std::get<AdditiveModelState>(state.model);
      double df = static_cast<double>(a.parametric_columns.size());
      for (const auto& t : a.smooths) df += t.edf;
      return df;
    }
  }
  return 0.0;
}

}  // namespace cureweib
