#include "cureweib/em.hpp"

#include "cureweib/error.hpp"
#include "cureweib/log.hpp"
#include "cureweib/numeric.hpp"
#include "cureweib/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace cureweib {

void EmConfig::validate() const {
  if (!(epsilon > 0.0)) throw InputError("epsilon must be > 0");
  if (max_iter < 1) throw InputError("max_iter must be >= 1");
  if (nm_evals_per_dim < 1) throw InputError("Nelder-Mead budget must be >= 1 evaluation per dimension");
  learner.validate();
}

ColumnScaling ColumnScaling::identity(Eigen::Index columns) {
  return {Eigen::VectorXd::Zero(columns), Eigen::VectorXd::Ones(columns)};
}

ColumnScaling ColumnScaling::fit(const Eigen::MatrixXd& design) {
  ColumnScaling s = identity(design.cols());
  const auto n = design.rows();
  if (n < 2) return s;
  for (Eigen::Index c = 0; c < design.cols(); ++c) {
    std::set<double> seen;
    for (Eigen::Index i = 0; i < n && seen.size() < 3; ++i) seen.insert(design(i, c));
    if (seen.size() < 3) continue;
    const double mean = design.col(c).mean();
    const double var = (design.col(c).array() - mean).square().sum() / static_cast<double>(n - 1);
    if (!(var > 0.0)) continue;
    s.center[c] = mean;
    s.scale[c] = std::sqrt(var);
  }
  return s;
}

Eigen::VectorXd ColumnScaling::apply(const Eigen::VectorXd& row) const {
  if (row.size() != center.size())
    throw InputError("covariate vector has " + std::to_string(row.size()) + " entries, scaling expects " +
                     std::to_string(center.size()));
  return ((row - center).array() / scale.array()).matrix();
}

Eigen::MatrixXd ColumnScaling::apply(const Eigen::MatrixXd& design) const {
  if (design.cols() != center.size()) throw InputError("design width does not match scaling");
  return ((design.rowwise() - center.transpose()).array().rowwise() / scale.transpose().array()).matrix();
}

namespace {

Eigen::MatrixXd stack(std::span<const PatientRecord> records, bool cure) {
  if (records.empty()) throw InputError("no patient records");
  const auto width = cure ? records[0].cure_covariates.size() : records[0].survival_covariates.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(records.size()), width);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& v = cure ? records[i].cure_covariates : records[i].survival_covariates;
    if (v.size() != width) throw InputError("record " + std::to_string(i) + " has inconsistent covariate length");
    m.row(static_cast<Eigen::Index>(i)) = v.transpose();
  }
  return m;
}

void check_aligned(std::span<const PatientRecord> records, std::span<const BackgroundAtTime> backgrounds) {
  if (records.size() != backgrounds.size()) throw InputError("records and backgrounds are not aligned");
}

}  // namespace

Eigen::MatrixXd survival_design(std::span<const PatientRecord> records) { return stack(records, false); }
Eigen::MatrixXd cure_design(std::span<const PatientRecord> records) { return stack(records, true); }

std::vector<PatientRecord> standardize_records(std::span<const PatientRecord> records,
                                               const Standardization& scaling) {
  std::vector<PatientRecord> out(records.begin(), records.end());
  for (auto& r : out) {
    r.survival_covariates = scaling.survival.apply(r.survival_covariates);
    r.cure_covariates = scaling.cure.apply(r.cure_covariates);
  }
  return out;
}

PosteriorVector e_step(std::span<const PatientRecord> records, std::span<const BackgroundAtTime> backgrounds,
                       const LearnerState& learner, const WeibullRegression& reg) {
  check_aligned(records, backgrounds);
  PosteriorVector post{Eigen::VectorXd(static_cast<Eigen::Index>(records.size()))};
  const Eigen::VectorXd thetas = predict_thetas(learner, cure_design(records));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const double theta = thetas[static_cast<Eigen::Index>(i)];
    const WeibullParams p = weibull_params(reg, r.survival_covariates);
    const BranchLogTerms b = branch_log_terms(theta, backgrounds[i], p, r.time, r.status);
    const double total = log_sum_exp(b.cured, b.uncured);
    if (!std::isfinite(total))
      throw DegenerateRecordError(i, "record '" + r.id + "' has zero likelihood under both branches");
    post.u[static_cast<Eigen::Index>(i)] = std::clamp(std::exp(b.cured - total), 0.0, 1.0);
  }
  return post;
}

LearnerState m_step_learner(const PosteriorVector& posterior, const Eigen::MatrixXd& design,
                            const CureLearnerSpec& spec, const LearnerState* warm) {
  return fit_learner(spec, FractionalResponseSet{design, posterior.u}, warm);
}

double weibull_objective(const PosteriorVector& posterior, std::span<const PatientRecord> records,
                         std::span<const BackgroundAtTime> backgrounds, const WeibullRegression& reg) {
  check_aligned(records, backgrounds);
  CompensatedSum s;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double w = 1.0 - posterior.u[static_cast<Eigen::Index>(i)];
    if (w == 0.0) continue;
    const auto& r = records[i];
    WeibullParams p;
    try {
      p = weibull_params(reg, r.survival_covariates);
    } catch (const IllConditionedError&) {
      return -std::numeric_limits<double>::infinity();
    }
    double term = log_net_survival_fatal(p.lambda, p.beta, r.time);
    if (r.status == 1) term += std::log(backgrounds[i].h0 + excess_hazard_fatal(p.lambda, p.beta, r.time));
    s.add(w * term);
  }
  const double v = s.value();
  return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
}

WeibullStep m_step_weibull(const PosteriorVector& posterior, std::span<const PatientRecord> records,
                           std::span<const BackgroundAtTime> backgrounds, const WeibullRegression& reg0,
                           int max_evaluations, double tol_size) {
  const Eigen::Index p = reg0.gamma.size();
  const Eigen::Index q = reg0.xi.size();
  auto unpack = [&](const Eigen::VectorXd& v) { return WeibullRegression{v.head(p), v.tail(q)}; };
  OptimProblem problem;
  problem.dimension = p + q;
  problem.objective = [&](const Eigen::VectorXd& v) {
    const double f = weibull_objective(posterior, records, backgrounds, unpack(v));
    return std::isfinite(f) ? -f : std::numeric_limits<double>::infinity();
  };
  Eigen::VectorXd x0(p + q);
  x0 << reg0.gamma, reg0.xi;
  const double incumbent = weibull_objective(posterior, records, backgrounds, reg0);

  NelderMeadOptions opts;
  opts.tol_size = tol_size;
  opts.max_iter = std::numeric_limits<int>::max();
  opts.max_evaluations = max_evaluations;
  const OptimResult res = minimize_nelder_mead(problem, x0, opts);
  if (!(-res.value > incumbent)) return {reg0, incumbent, res.converged};
  return {unpack(res.argmin), -res.value, res.converged};
}

WeibullRegression initial_regression(std::span<const PatientRecord> records) {
  if (records.empty()) throw InputError("no patient records");
  CompensatedSum events, all;
  int count = 0;
  for (const auto& r : records) {
    all.add(r.time);
    if (r.status == 1) {
      events.add(r.time);
      ++count;
    }
  }
  double mean = count > 0 ? events.value() / count : all.value() / static_cast<double>(records.size());
  if (!(mean > 0.0)) mean = 1.0;  // every time is zero
  const auto p = records[0].survival_covariates.size();
  WeibullRegression reg{Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(p)};
  reg.gamma[0] = -std::log(mean);
  return reg;
}

namespace {

double observed_loglik(std::span<const PatientRecord> records, std::span<const BackgroundAtTime> backgrounds,
                       const LearnerState& learner, const Eigen::MatrixXd& design, const WeibullRegression& reg) {
  const Eigen::VectorXd theta = predict_thetas(learner, design);
  return log_likelihood(records, reg, std::span<const double>(theta.data(), static_cast<std::size_t>(theta.size())),
                        backgrounds);
}

}  // namespace

FittedCureModel fit_em(std::span<const PatientRecord> raw, std::span<const BackgroundAtTime> backgrounds,
                       const EmConfig& config) {
  config.validate();
  check_aligned(raw, backgrounds);
  if (raw.empty()) throw InputError("no patient records");
  for (const auto& r : raw) validate(r);

  FittedCureModel model;
  model.config = config;
  model.n = raw.size();
  const Eigen::MatrixXd raw_x = survival_design(raw);
  const Eigen::MatrixXd raw_y = cure_design(raw);
  model.scaling = config.standardize
                      ? Standardization{ColumnScaling::fit(raw_x), ColumnScaling::fit(raw_y)}
                      : Standardization{ColumnScaling::identity(raw_x.cols()), ColumnScaling::identity(raw_y.cols())};
  const std::vector<PatientRecord> records = standardize_records(raw, model.scaling);
  const Eigen::MatrixXd design = model.scaling.cure.apply(raw_y);

  CureLearnerSpec spec = config.learner;
  spec.nnet.seed = config.seed;

  WeibullRegression reg = initial_regression(records);
  if (config.gamma0) {
    if (config.gamma0->size() != reg.gamma.size()) throw InputError("gamma0 has the wrong length");
    reg.gamma = *config.gamma0;
  }
  if (config.xi0) {
    if (config.xi0->size() != reg.xi.size()) throw InputError("xi0 has the wrong length");
    reg.xi = *config.xi0;
  }

  PosteriorVector post{Eigen::VectorXd(static_cast<Eigen::Index>(records.size()))};
  for (std::size_t i = 0; i < records.size(); ++i)
    post.u[static_cast<Eigen::Index>(i)] = 1.0 - records[i].status;
  LearnerState learner = m_step_learner(post, design, spec, nullptr);

  double ll = observed_loglik(records, backgrounds, learner, design, reg);
  if (!std::isfinite(ll)) throw FitError("non-finite log-likelihood at the initial guess");
  model.trace.push_back(ll);

  const int budget = config.nm_evals_per_dim * static_cast<int>(reg.gamma.size() + reg.xi.size());
  // Without deaths the excess-hazard parameters carry no information.
  const bool any_event = std::any_of(records.begin(), records.end(), [](const auto& r) { return r.status == 1; });
  if (!any_event) log_warn_once("no-deaths", "no deaths in the cohort; Weibull parameters are kept at their initial values");
  for (int it = 1; it <= config.max_iter; ++it) {
    post = e_step(records, backgrounds, learner, reg);
    learner = m_step_learner(post, design, spec, &learner);
    if (any_event) {
      const WeibullStep ws = m_step_weibull(post, records, backgrounds, reg, budget, config.nm_tol);
      reg = ws.regression;
      if (!ws.converged) model.weibull_unconverged.push_back(it);
    }

    const double next = observed_loglik(records, backgrounds, learner, design, reg);
    if (!std::isfinite(next)) throw FitError("non-finite log-likelihood at EM iteration " + std::to_string(it));
    model.trace.push_back(next);
    model.iterations = it;
    log_debug("em iteration " + std::to_string(it) + " loglik " + std::to_string(next));
    if (std::abs(next - ll) < config.epsilon) {
      model.converged = true;
      ll = next;
      break;
    }
    ll = next;
  }
  if (!model.converged)
    log_warn("EM stopped at max_iter=" + std::to_string(config.max_iter) + " without meeting epsilon");

  model.posterior = e_step(records, backgrounds, learner, reg);
  model.learner = std::move(learner);
  model.regression = std::move(reg);
  return model;
}

FittedCureModel fit_em(std::span<const PatientRecord> records, const BackgroundModel& background,
                       const EmConfig& config) {
  const auto bg = backgrounds_at_exit(background, records);
  return fit_em(records, std::span<const BackgroundAtTime>(bg), config);
}

FittedCureModel fit_em(std::span<const PatientRecord> records, const LifeTable& table, const EmConfig& config) {
  return fit_em(records, LifeTableBackground(table), config);
}

double predict_cure_probability(const FittedCureModel& model, const PatientRecord& record) {
  return predict_theta(model.learner, model.scaling.cure.apply(record.cure_covariates));
}

WeibullParams predict_weibull(const FittedCureModel& model, const PatientRecord& record) {
  return weibull_params(model.regression, model.scaling.survival.apply(record.survival_covariates));
}

double model_log_likelihood(const FittedCureModel& model, std::span<const PatientRecord> records,
                            std::span<const BackgroundAtTime> backgrounds) {
  const auto scaled = standardize_records(records, model.scaling);
  const Eigen::MatrixXd design = cure_design(scaled);
  return observed_loglik(scaled, backgrounds, model.learner, design, model.regression);
}

}  // namespace cureweib
