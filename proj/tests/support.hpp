#pragma once

#include <cureweib/survival.hpp>

#include <Eigen/Core>

#include <random>
#include <string>
#include <vector>

namespace testing {

inline cureweib::PatientRecord make_record(double time, int status, Eigen::VectorXd x = Eigen::VectorXd::Ones(1),
                                           Eigen::VectorXd y = Eigen::VectorXd::Ones(1), double age = 60.0,
                                           double year = 2000.0) {
  static int counter = 0;
  cureweib::PatientRecord r;
  r.id = "p" + std::to_string(++counter);
  r.time = time;
  r.status = status;
  r.survival_covariates = std::move(x);
  r.cure_covariates = std::move(y);
  r.age_at_dx = age;
  r.year_dx = year;
  return r;
}

// Small random cohort with integer-ish follow-up and ties.
inline std::vector<cureweib::PatientRecord> random_cohort(std::mt19937_64& rng, int n, double max_days = 3000.0) {
  std::uniform_real_distribution<double> t(1.0, max_days);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> age(30, 90);
  std::vector<cureweib::PatientRecord> out;
  for (int i = 0; i < n; ++i) {
    double time = std::round(t(rng) / 30.0) * 30.0 + 1.0;
    out.push_back(make_record(time, coin(rng), Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1), age(rng),
                              1990.0 + coin(rng) * 5.0));
  }
  return out;
}

}  // namespace testing
