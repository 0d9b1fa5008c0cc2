#include "cureweib/survival.hpp"

#include "cureweib/error.hpp"
#include "cureweib/numeric.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace cureweib {
namespace {

constexpr double kMaxLinearPredictor = 700.0;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_positive(double lambda, double beta) {
  if (!(lambda > 0.0) || !(beta > 0.0) || !std::isfinite(lambda) || !std::isfinite(beta))
    throw InputError("Weibull parameters must be positive and finite (lambda=" +
                     std::to_string(lambda) + ", beta=" + std::to_string(beta) + ")");
}

// log((lambda t)^beta)
double log_cumulative_excess(double lambda, double beta, double t) {
  return beta * (std::log(lambda) + std::log(t));
}

}  // namespace

void validate(const PatientRecord& r) {
  const std::string who = "patient '" + r.id + "': ";
  if (!(r.time >= 0.0) || !std::isfinite(r.time)) throw InputError(who + "time must be >= 0");
  if (r.status != 0 && r.status != 1) throw InputError(who + "status must be 0 or 1");
  if (r.survival_covariates.size() < 1 || r.survival_covariates[0] != 1.0)
    throw InputError(who + "survival covariates must start with an intercept 1");
  if (r.cure_covariates.size() < 1 || r.cure_covariates[0] != 1.0)
    throw InputError(who + "cure covariates must start with an intercept 1");
  if (!r.survival_covariates.allFinite() || !r.cure_covariates.allFinite())
    throw InputError(who + "covariates must be finite");
  if (!(r.age_at_dx >= 0.0)) throw InputError(who + "age at diagnosis must be >= 0");
}

WeibullParams weibull_params(const WeibullRegression& reg, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != reg.gamma.size() || x.size() != reg.xi.size())
    throw InputError("covariate dimension " + std::to_string(x.size()) +
                     " does not match regression dimension " + std::to_string(reg.gamma.size()));
  const double eta_scale = x.dot(reg.gamma);
  const double eta_shape = x.dot(reg.xi);
  if (!(std::fabs(eta_scale) <= kMaxLinearPredictor) || !(std::fabs(eta_shape) <= kMaxLinearPredictor))
    throw IllConditionedError("Weibull linear predictor out of range (scale " +
                              std::to_string(eta_scale) + ", shape " + std::to_string(eta_shape) + ")");
  return {std::exp(eta_scale), std::exp(eta_shape)};
}

double log_net_survival_fatal(double lambda, double beta, double t) {
  require_positive(lambda, beta);
  if (t < 0.0) throw InputError("time must be >= 0");
  if (t == 0.0) return 0.0;
  return -std::exp(log_cumulative_excess(lambda, beta, t));
}

double net_survival_fatal(double lambda, double beta, double t) {
  return std::exp(log_net_survival_fatal(lambda, beta, t));
}

double excess_hazard_fatal(double lambda, double beta, double t) {
  require_positive(lambda, beta);
  if (t < 0.0) throw InputError("time must be >= 0");
  if (t == 0.0) {
    if (beta < 1.0) throw SingularHazardError("excess hazard is infinite at t=0 when beta < 1");
    return beta == 1.0 ? lambda : 0.0;
  }
  return beta * lambda * std::exp((beta - 1.0) * (std::log(lambda) + std::log(t)));
}

double mixture_net_survival(double theta, double lambda, double beta, double t) {
  return theta + (1.0 - theta) * net_survival_fatal(lambda, beta, t);
}

BranchLogTerms branch_log_terms(double theta, const BackgroundAtTime& bg, const WeibullParams& p,
                                double t, int delta) {
  const double log_s0 = std::log(bg.s0);
  const double log_theta = theta > 0.0 ? std::log(theta) : kNegInf;
  const double log_one_minus = theta < 1.0 ? std::log1p(-theta) : kNegInf;

  double cured = log_theta + log_s0;
  double uncured = log_one_minus + log_s0 + log_net_survival_fatal(p.lambda, p.beta, t);
  if (delta == 1) {
    cured += bg.h0 > 0.0 ? std::log(bg.h0) : kNegInf;
    const double total = bg.h0 + excess_hazard_fatal(p.lambda, p.beta, t);
    uncured += total > 0.0 ? std::log(total) : kNegInf;
  }
  return {cured, uncured};
}

double patient_likelihood(double theta, const BackgroundAtTime& bg, double lambda, double beta,
                          double t, int delta) {
  const double s_d = net_survival_fatal(lambda, beta, t);
  double cured = theta * bg.s0;
  double uncured = (1.0 - theta) * bg.s0 * s_d;
  if (delta == 1) {
    cured *= bg.h0;
    uncured *= bg.h0 + excess_hazard_fatal(lambda, beta, t);
  }
  const double value = cured + uncured;
  if (!(value > 0.0)) throw DegenerateRecordError(0, "patient likelihood is zero");
  return value;
}

double log_patient_likelihood(double theta, const BackgroundAtTime& bg, double lambda, double beta,
                              double t, int delta) {
  const auto terms = branch_log_terms(theta, bg, {lambda, beta}, t, delta);
  const double value = log_sum_exp(terms.cured, terms.uncured);
  if (!(value > kNegInf)) throw DegenerateRecordError(0, "patient likelihood is zero");
  return value;
}

double log_likelihood(std::span<const PatientRecord> records, const WeibullRegression& reg,
                      std::span<const double> theta, std::span<const BackgroundAtTime> backgrounds) {
  if (theta.size() != records.size() || backgrounds.size() != records.size())
    throw InputError("log_likelihood: inputs are not aligned");
  CompensatedSum sum;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto p = weibull_params(reg, r.survival_covariates);
    const auto terms = branch_log_terms(theta[i], backgrounds[i], p, r.time, r.status);
    const double li = log_sum_exp(terms.cured, terms.uncured);
    if (!(li > kNegInf) || std::isnan(li))
      throw DegenerateRecordError(i, "zero likelihood for record " + std::to_string(i) + " ('" +
                                         r.id + "')");
    sum.add(li);
  }
  return sum.value();
}

}  // namespace cureweib
