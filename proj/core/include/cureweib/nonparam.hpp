#pragma once

#include "cureweib/lifetable.hpp"
#include "cureweib/survival.hpp"

#include <span>
#include <vector>

namespace cureweib {

struct RsCurve {
  std::vector<double> grid;      // days
  std::vector<double> estimate;  // relative survival
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> observed;  // Kaplan-Meier
  std::vector<double> expected;  // Ederer II expected survival
  std::vector<int> at_risk;
  bool truncated = false;  // grid points past the last follow-up time were dropped
};

struct KaplanMeierCurve {
  std::vector<double> grid;
  std::vector<double> survival;
  std::vector<double> greenwood;  // sum d / (Y (Y - d)); +inf once S hits 0
  std::vector<int> at_risk;
};

// Grid of whole months (365.25 / 12 days) up to `max_days`.
std::vector<double> monthly_grid(double max_days);

KaplanMeierCurve kaplan_meier(std::span<const PatientRecord> records, std::span<const double> grid);

// Product-limit observed survival divided by exp(-Lambda_E), where Lambda_E
// accumulates the population hazard averaged over the patients still at risk.
// Pointwise intervals use the log-transformed Greenwood variance.
RsCurve ederer2(std::span<const PatientRecord> records, const BackgroundModel& background,
                std::span<const double> grid, double level = 0.95);
RsCurve ederer2(std::span<const PatientRecord> records, const LifeTable& table, std::span<const double> grid,
                double level = 0.95);

}  // namespace cureweib
