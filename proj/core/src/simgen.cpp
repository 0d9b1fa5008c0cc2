#include "cureweib/simgen.hpp"

#include "cureweib/error.hpp"
#include "cureweib/numeric.hpp"
#include "cureweib/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cureweib {

void SimConfig::validate() const {
  if (n < 10) throw InputError("simulation needs n >= 10");
  if (!(tau > 0.0)) throw InputError("tau must be > 0");
  if (replicates < 1) throw InputError("replicates must be >= 1");
  for (double v : {lambda_u, beta_u, lambda_b, beta_b})
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError("Weibull parameters must be positive");
  if (force_theta && !(*force_theta >= 0.0 && *force_theta <= 1.0))
    throw InputError("forced cure probability must lie in [0, 1]");
}

namespace {

Eigen::VectorXd standardized(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  const double sd = std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
  if (!(sd > 0.0)) return v.array() - mean;
  return (v.array() - mean) / sd;
}

double weibull_draw(std::mt19937_64& rng, double lambda, double beta) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  while (u <= 0.0) u = unif(rng);
  return std::pow(-std::log(u), 1.0 / beta) / lambda;
}

}  // namespace

SimCovariates gen_covariates(const SimConfig& config, std::mt19937_64& rng) {
  config.validate();
  const int n = config.n;
  SimCovariates c;
  c.age_raw.resize(n);
  c.period_raw.resize(n);
  c.sex.resize(n);
  std::poisson_distribution<int> poisson(45.0);
  std::uniform_real_distribution<double> early(0.0, config.tau / 2.0);
  std::uniform_real_distribution<double> late(config.tau / 2.0, config.tau);
  std::bernoulli_distribution male(0.48);
  const int n_early = n / 3;
  for (int i = 0; i < n; ++i) {
    c.age_raw[i] = 20.0 + poisson(rng);
    c.period_raw[i] = i < n_early ? early(rng) : late(rng);
    c.sex[i] = male(rng) ? 1.0 : 0.0;
  }
  c.age = standardized(c.age_raw);
  c.period = standardized(c.period_raw);
  return c;
}

SimCovariates gen_covariates(const SimConfig& config) {
  std::mt19937_64 rng(config.seed);
  return gen_covariates(config, rng);
}

double true_cure_probability(double age, double sex, double period, const std::array<double, 6>& k) {
  return logistic(k[0] + k[1] * age + k[2] * sex + k[3] * age * age + k[4] * period * period +
                  k[5] * std::abs(period) * age);
}

SimDataset gen_dataset(const SimConfig& config) {
  std::mt19937_64 rng(config.seed);
  SimDataset ds;
  ds.covariates = gen_covariates(config, rng);
  const auto& c = ds.covariates;
  const int n = config.n;
  ds.theta0.resize(n);
  ds.cured.resize(n);
  ds.records.reserve(n);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const double theta = config.force_theta ? *config.force_theta
                                            : true_cure_probability(c.age[i], c.sex[i], c.period[i],
                                                                    config.cure_coefficients);
    ds.theta0[i] = theta;
    const bool cured = unif(rng) < theta;
    ds.cured[i] = cured ? 1 : 0;
    double death = weibull_draw(rng, config.lambda_b, config.beta_b);
    if (!cured) death = std::min(death, weibull_draw(rng, config.lambda_u, config.beta_u));
    const double censor = config.tau - c.period_raw[i];

    PatientRecord r;
    r.id = std::to_string(i + 1);
    r.status = death < censor ? 1 : 0;
    r.time = std::max(std::min(death, censor) * kDaysPerYear, kMinTimeDays);
    r.survival_covariates = Eigen::VectorXd::Ones(1);
    r.cure_covariates = Eigen::Vector4d(1.0, c.age_raw[i], c.sex[i], c.period_raw[i]);
    r.age_at_dx = c.age_raw[i];
    r.sex = c.sex[i] > 0.5 ? Sex::male : Sex::female;
    r.year_dx = config.base_year;
    ds.records.push_back(std::move(r));
  }
  return ds;
}

PatientTable to_patient_table(const SimDataset& dataset) {
  PatientTable t;
  t.extra_names = {"period"};
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto& r = dataset.records[i];
    t.rows.push_back({r.id, r.time, r.status, r.age_at_dx, r.sex, r.year_dx,
                      {dataset.covariates.period_raw[static_cast<Eigen::Index>(i)]}});
  }
  return t;
}

CovariateMapping simulation_mapping() { return {{}, {"age", "sex", "period"}}; }

BackgroundAtTime WeibullBackground::at(const PatientRecord&, double t) const {
  if (!(t >= 0.0) || !std::isfinite(t)) throw RangeError("background evaluated at invalid time");
  const double h = std::pow(lambda_ * t, beta_);
  const double h0 = t > 0.0 ? beta_ * lambda_ * std::pow(lambda_ * t, beta_ - 1.0) : (beta_ == 1.0 ? lambda_ : 0.0);
  return {std::exp(-h), h0};
}

double WeibullBackground::cumulative_hazard(const PatientRecord&, double t) const {
  if (!(t >= 0.0) || !std::isfinite(t)) throw RangeError("background evaluated at invalid time");
  return std::pow(lambda_ * t, beta_);
}

LifeTable synthetic_life_table(const SimConfig& config) {
  config.validate();
  constexpr int age_min = 0, age_max = 110;
  const int years = static_cast<int>(std::ceil(config.tau)) + 1;
  const int year_min = config.base_year;
  const int year_max = config.base_year + years - 1;
  auto cum = [&](double k) { return std::pow(config.lambda_b * k, config.beta_b); };
  std::vector<double> rates;
  rates.reserve(static_cast<std::size_t>((age_max - age_min + 1) * years));
  for (int a = age_min; a <= age_max; ++a)
    for (int k = 0; k < years; ++k) rates.push_back(cum(k + 1.0) - cum(k));
  return LifeTable(age_min, age_max, year_min, year_max, rates, rates);
}

CureErrors cure_errors(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  if (estimate.size() != truth.size() || estimate.size() == 0) throw InputError("cure_errors: size mismatch");
  const Eigen::ArrayXd d = estimate.array() - truth.array();
  return {d.square().mean(), d.abs().mean()};
}

std::vector<ReplicateError> evaluate_replicates(const SimConfig& config, const std::vector<NamedModel>& models) {
  config.validate();
  if (models.empty()) throw InputError("no models to evaluate");
  const std::size_t m = models.size();
  std::vector<ReplicateError> rows(static_cast<std::size_t>(config.replicates) * m);
  const WeibullBackground background(config.lambda_b, config.beta_b);
  parallel_for(static_cast<std::size_t>(config.replicates), worker_count(), [&](std::size_t r) {
    SimConfig rc = config;
    rc.seed = derive_seed(config.seed, r);
    const SimDataset ds = gen_dataset(rc);
    const auto bg = backgrounds_at_exit(background, ds.records);
    for (std::size_t j = 0; j < m; ++j) {
      ReplicateError& row = rows[r * m + j];
      row.replicate = static_cast<int>(r);
      row.model = models[j].name;
      try {
        EmConfig em = models[j].em;
        em.seed = derive_seed(rc.seed, j + 1);
        const FittedCureModel fit = fit_em(ds.records, std::span<const BackgroundAtTime>(bg), em);
        Eigen::VectorXd est(config.n);
        for (int i = 0; i < config.n; ++i) est[i] = predict_cure_probability(fit, ds.records[i]);
        const CureErrors e = cure_errors(est, ds.theta0);
        row.mse = e.mse;
        row.mae = e.mae;
        row.iterations = fit.iterations;
        row.converged = fit.converged;
      } catch (const std::exception& ex) {
        row.ok = false;
        row.error = ex.what();
      }
    }
  });
  return rows;
}

}  // namespace cureweib
