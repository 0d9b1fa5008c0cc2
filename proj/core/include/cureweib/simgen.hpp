#pragma once

#include "cureweib/em.hpp"
#include "cureweib/lifetable.hpp"
#include "cureweib/numeric.hpp"
#include "cureweib/records.hpp"
#include "cureweib/survival.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace cureweib {

struct SimConfig {
  int n = 1000;
  double tau = 30.0;  // years of follow-up
  std::uint64_t seed = 1;
  int replicates = 1;
  double lambda_u = 0.5;   // uncured excess mortality, per year
  double beta_u = 1.2;
  double lambda_b = 0.02;  // background mortality, per year
  double beta_b = 2.2;
  // intercept, age, sex, age^2, period^2, |period| * age
  std::array<double, 6> cure_coefficients{0.5, -2.5, 0.1, -2.8, 0.8, 1.2};
  int base_year = 2000;              // nominal calendar year of every diagnosis
  std::optional<double> force_theta; // replaces the true cure probability when set

  void validate() const;
};

struct SimCovariates {
  Eigen::VectorXd age_raw;     // years
  Eigen::VectorXd period_raw;  // years since the start of accrual
  Eigen::VectorXd sex;         // 0/1
  Eigen::VectorXd age;         // standardized
  Eigen::VectorXd period;      // standardized
};

struct SimDataset {
  std::vector<PatientRecord> records;
  SimCovariates covariates;
  Eigen::VectorXd theta0;
  std::vector<int> cured;  // latent z_i
};

SimCovariates gen_covariates(const SimConfig& config);
SimCovariates gen_covariates(const SimConfig& config, std::mt19937_64& rng);

double true_cure_probability(double age, double sex, double period,
                             const std::array<double, 6>& coefficients = SimConfig{}.cure_coefficients);

// Records carry x = (1) and y = (1, age, sex, period) with raw age and period;
// the EM engine standardizes them with the same sample moments used here.
SimDataset gen_dataset(const SimConfig& config);

// Patient-CSV form with an extra `period` column; read back with survival
// covariates {} and cure covariates {age, sex, period}.
PatientTable to_patient_table(const SimDataset& dataset);
CovariateMapping simulation_mapping();

// Background hazard of the generator, evaluated exactly.
class WeibullBackground final : public BackgroundModel {
 public:
  WeibullBackground(double lambda_per_year, double beta) : lambda_(lambda_per_year / kDaysPerYear), beta_(beta) {}
  BackgroundAtTime at(const PatientRecord& patient, double t_days) const override;
  double cumulative_hazard(const PatientRecord& patient, double t_days) const override;

 private:
  double lambda_;  // per day
  double beta_;
};

// Life table whose year axis counts years since the nominal diagnosis year:
// rate(age, base_year + k) = H_b(k + 1) - H_b(k) for every age and sex.
LifeTable synthetic_life_table(const SimConfig& config);

struct NamedModel {
  std::string name;
  EmConfig em;
};

struct ReplicateError {
  int replicate = 0;
  std::string model;
  double mse = 0.0;
  double mae = 0.0;
  bool ok = true;
  std::string error;
  int iterations = 0;
  bool converged = false;
};

struct CureErrors {
  double mse = 0.0;
  double mae = 0.0;
};
CureErrors cure_errors(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);

// Replicate r uses seed derive_seed(config.seed, r); replicates run in
// parallel. Fit failures are recorded in the row, not thrown.
std::vector<ReplicateError> evaluate_replicates(const SimConfig& config, const std::vector<NamedModel>& models);

}  // namespace cureweib
