#pragma once

#include "cureweib/em.hpp"
#include "cureweib/lifetable.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cureweib {

// Weibull rate in 1/years; results in years.
double median_survival_fatal(double lambda, double beta);
// Root of S_D(t) = alpha: (1/lambda) (-log alpha)^(1/beta).
double time_to_cure(double lambda, double beta, double alpha);

struct CureIndicators {
  double theta = 0.0;
  double median_years = 0.0;
  std::vector<double> alphas;
  std::vector<double> time_to_cure_years;
};

CureIndicators cure_indicators(const FittedCureModel& model, const PatientRecord& record,
                               std::span<const double> alphas);

struct ModelSelectionScores {
  double loglik = 0.0;
  double df = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  std::size_t n = 0;
  std::optional<double> cv_loglik;
  bool converged = true;  // false flags scores from an unconverged fit
};

ModelSelectionScores information_criteria(double loglik, double df, std::size_t n);
// df = learner df + dim(gamma) + dim(xi).
ModelSelectionScores information_criteria(const FittedCureModel& model);

// Fold index in [0, k) per record; near-equal fold sizes, seeded shuffle.
std::vector<int> fold_assignment(std::size_t n, int k, std::uint64_t seed);

struct CrossValidation {
  double mean_loglik = 0.0;  // over completed folds
  std::vector<double> fold_loglik;
  std::vector<int> failed_folds;
  std::vector<std::string> errors;
};

CrossValidation cross_validate(std::span<const PatientRecord> records, std::span<const BackgroundAtTime> backgrounds,
                               const EmConfig& config, int k = 5, std::uint64_t seed = 1);
CrossValidation cross_validate(std::span<const PatientRecord> records, const LifeTable& table, const EmConfig& config,
                               int k = 5, std::uint64_t seed = 1);

// A scalar functional of a fitted model. `population` is the original cohort.
struct BootstrapTarget {
  std::string name;
  std::function<double(const FittedCureModel&, std::span<const PatientRecord> population)> evaluate;
};

BootstrapTarget target_population_cure();
BootstrapTarget target_profile_cure(std::string name, PatientRecord profile);
BootstrapTarget target_profile_median(std::string name, PatientRecord profile);
BootstrapTarget target_profile_time_to_cure(std::string name, PatientRecord profile, double alpha);
BootstrapTarget target_gamma(Eigen::Index j);
BootstrapTarget target_xi(Eigen::Index j);

struct BootstrapInterval {
  std::string name;
  double estimate = 0.0;  // on the original fit
  double lower = 0.0;
  double upper = 0.0;
  double se = 0.0;        // replicate standard deviation
  double z = 0.0;         // Wald statistic estimate / se
  double p_value = 1.0;
  int replicates = 0;     // successful replicates
};

struct BootstrapResult {
  std::vector<BootstrapInterval> intervals;
  std::vector<std::vector<double>> draws;  // per target, per replicate (NaN when the refit failed)
  int requested = 0;
  int failed = 0;
  bool high_failure_rate = false;  // more than 10% of refits failed
};

// Percentile interval from the order statistics x_(k) and x_(m+1-k) with
// k = ceil(m (1 - level) / 2); equivariant under monotone transforms.
std::pair<double, double> percentile_interval(std::vector<double> values, double level);

BootstrapResult bootstrap_ci(std::span<const PatientRecord> records, std::span<const BackgroundAtTime> backgrounds,
                             const EmConfig& config, int replicates, double level,
                             const std::vector<BootstrapTarget>& targets, std::uint64_t seed);
BootstrapResult bootstrap_ci(std::span<const PatientRecord> records, const LifeTable& table, const EmConfig& config,
                             int replicates, double level, const std::vector<BootstrapTarget>& targets,
                             std::uint64_t seed);

struct Grouping {
  std::vector<double> age_edges{0, 55, 65, 75, 99};  // right-closed classes (a, b]
  double period_width = 5.0;                          // years
  std::optional<double> period_origin;                // defaults to floor(min year_dx)
};

struct GroupKey {
  int age_class = 0;
  int period_class = 0;
  std::string label;  // e.g. "age(55,65]|period[1990,1995)"
  friend bool operator==(const GroupKey&, const GroupKey&) = default;
};

// Throws InputError when an age falls outside the class edges.
std::vector<GroupKey> assign_groups(std::span<const PatientRecord> records, const Grouping& grouping);

struct GroupSummary {
  GroupKey key;
  int count = 0;
  double theta = 0.0;
  double median_years = 0.0;
  std::vector<double> time_to_cure_years;  // aligned with the requested alphas
};

// Cell means of individual predictions; empty cells are omitted.
std::vector<GroupSummary> group_summaries(const FittedCureModel& model, std::span<const PatientRecord> records,
                                          const Grouping& grouping, std::span<const double> alphas);

// Mean over the records of the individual net survival theta + (1 - theta) S_D
// at each grid time (days).
std::vector<double> averaged_net_survival(const FittedCureModel& model, std::span<const PatientRecord> records,
                                          std::span<const double> grid_days);

}  // namespace cureweib
