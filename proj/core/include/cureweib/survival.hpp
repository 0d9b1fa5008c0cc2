#pragma once

#include <Eigen/Core>

#include <span>
#include <string>

namespace cureweib {

enum class Sex { female, male };

// Same-day deaths are recorded as 0 by registries; they are imputed to this.
inline constexpr double kMinTimeDays = 0.5;

struct PatientRecord {
  std::string id;
  double time = 0.0;  // follow-up, days
  int status = 0;     // 1 = death from any cause
  Eigen::VectorXd survival_covariates;  // x, first entry 1
  Eigen::VectorXd cure_covariates;      // y, first entry 1
  double age_at_dx = 0.0;               // years
  Sex sex = Sex::female;
  double year_dx = 0.0;                 // decimal calendar year of diagnosis
};

// Throws InputError describing the first violated invariant.
void validate(const PatientRecord& record);

// Log-linear Weibull regression: lambda(x) = exp(x'gamma), beta(x) = exp(x'xi).
struct WeibullRegression {
  Eigen::VectorXd gamma;
  Eigen::VectorXd xi;

  Eigen::Index dimension() const { return gamma.size(); }
};

struct WeibullParams {
  double lambda = 1.0;  // per day
  double beta = 1.0;
};

struct BackgroundAtTime {
  double s0 = 1.0;  // expected survival S_0(t)
  double h0 = 0.0;  // population hazard at t, per day
};

// Throws IllConditionedError when a linear predictor exceeds 700 in magnitude.
WeibullParams weibull_params(const WeibullRegression& reg, const Eigen::Ref<const Eigen::VectorXd>& x);

double net_survival_fatal(double lambda, double beta, double t);
double log_net_survival_fatal(double lambda, double beta, double t);

// h_D(t) = beta * lambda * (lambda t)^(beta - 1). Throws SingularHazardError at
// t = 0 when beta < 1.
double excess_hazard_fatal(double lambda, double beta, double t);

double mixture_net_survival(double theta, double lambda, double beta, double t);

// Log of the two mixture branches of a patient's likelihood contribution:
//   cured   = log(theta * S0 * h0^delta)
//   uncured = log((1 - theta) * S0 * S_D * (h0 + h_D)^delta)
// Either may be -inf.
struct BranchLogTerms {
  double cured;
  double uncured;
};

BranchLogTerms branch_log_terms(double theta, const BackgroundAtTime& bg, const WeibullParams& p,
                                double t, int delta);

double patient_likelihood(double theta, const BackgroundAtTime& bg, double lambda, double beta,
                          double t, int delta);

// log L_i via log-sum-exp of the branch terms. Throws DegenerateRecordError
// (index 0) when both branches vanish.
double log_patient_likelihood(double theta, const BackgroundAtTime& bg, double lambda, double beta,
                              double t, int delta);

// Observed-data log-likelihood; inputs aligned by index. Degenerate records
// raise DegenerateRecordError carrying the offending index.
double log_likelihood(std::span<const PatientRecord> records, const WeibullRegression& reg,
                      std::span<const double> theta, std::span<const BackgroundAtTime> backgrounds);

}  // namespace cureweib
