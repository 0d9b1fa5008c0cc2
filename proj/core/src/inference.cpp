#include "cureweib/inference.hpp"

#include "cureweib/error.hpp"
#include "cureweib/log.hpp"
#include "cureweib/numeric.hpp"
#include "cureweib/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace cureweib {

namespace {

void check_weibull(double lambda, double beta) {
  if (!(lambda > 0.0) || !(beta > 0.0) || !std::isfinite(lambda) || !std::isfinite(beta))
    throw InputError("Weibull parameters must be positive and finite");
}

double per_year(double lambda_per_day) { return lambda_per_day * kDaysPerYear; }

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

double median_survival_fatal(double lambda, double beta) {
  check_weibull(lambda, beta);
  return std::pow(std::log(2.0), 1.0 / beta) / lambda;
}

double time_to_cure(double lambda, double beta, double alpha) {
  check_weibull(lambda, beta);
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  return std::pow(-std::log(alpha), 1.0 / beta) / lambda;
}

CureIndicators cure_indicators(const FittedCureModel& model, const PatientRecord& record,
                               std::span<const double> alphas) {
  CureIndicators out;
  out.theta = predict_cure_probability(model, record);
  const WeibullParams p = predict_weibull(model, record);
  out.median_years = median_survival_fatal(per_year(p.lambda), p.beta);
  for (double a : alphas) {
    out.alphas.push_back(a);
    out.time_to_cure_years.push_back(time_to_cure(per_year(p.lambda), p.beta, a));
  }
  return out;
}

ModelSelectionScores information_criteria(double loglik, double df, std::size_t n) {
  if (n == 0) throw InputError("information criteria need n >= 1");
  ModelSelectionScores s;
  s.loglik = loglik;
  s.df = df;
  s.n = n;
  s.aic = -2.0 * loglik + 2.0 * df;
  s.bic = -2.0 * loglik + df * std::log(static_cast<double>(n));
  return s;
}

ModelSelectionScores information_criteria(const FittedCureModel& model) {
  const double df = learner_degrees_of_freedom(model.learner) + static_cast<double>(model.regression.gamma.size()) +
                    static_cast<double>(model.regression.xi.size());
  ModelSelectionScores s = information_criteria(model.log_likelihood(), df, model.n);
  s.converged = model.converged;
  return s;
}

std::vector<int> fold_assignment(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw InputError("cross-validation needs k >= 2");
  if (n < static_cast<std::size_t>(k)) throw InputError("cross-validation needs at least k records");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold(n);
  for (std::size_t pos = 0; pos < n; ++pos) fold[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
  return fold;
}

CrossValidation cross_validate(std::span<const PatientRecord> records, std::span<const BackgroundAtTime> backgrounds,
                               const EmConfig& config, int k, std::uint64_t seed) {
  if (records.size() != backgrounds.size()) throw InputError("records and backgrounds are not aligned");
  const std::vector<int> fold = fold_assignment(records.size(), k, seed);
  std::vector<double> scores(static_cast<std::size_t>(k), kNaN);
  std::vector<std::string> errors(static_cast<std::size_t>(k));
  parallel_for(static_cast<std::size_t>(k), worker_count(), [&](std::size_t f) {
    std::vector<PatientRecord> train, test;
    std::vector<BackgroundAtTime> train_bg, test_bg;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (fold[i] == static_cast<int>(f)) {
        test.push_back(records[i]);
        test_bg.push_back(backgrounds[i]);
      } else {
        train.push_back(records[i]);
        train_bg.push_back(backgrounds[i]);
      }
    }
    try {
      const FittedCureModel fit = fit_em(train, std::span<const BackgroundAtTime>(train_bg), config);
      scores[f] = model_log_likelihood(fit, test, test_bg);
    } catch (const std::exception& e) {
      errors[f] = e.what();
    }
  });
  CrossValidation cv;
  CompensatedSum total;
  for (int f = 0; f < k; ++f) {
    if (std::isfinite(scores[static_cast<std::size_t>(f)])) {
      cv.fold_loglik.push_back(scores[static_cast<std::size_t>(f)]);
      total.add(scores[static_cast<std::size_t>(f)]);
    } else {
      cv.failed_folds.push_back(f);
      const std::string why = errors[static_cast<std::size_t>(f)].empty() ? "non-finite holdout log-likelihood"
                                                                          : errors[static_cast<std::size_t>(f)];
      cv.errors.push_back(why);
      log_warn("cross-validation fold " + std::to_string(f) + " skipped: " + why);
    }
  }
  if (cv.fold_loglik.empty()) throw FitError("every cross-validation fold failed");
  cv.mean_loglik = total.value() / static_cast<double>(cv.fold_loglik.size());
  return cv;
}

CrossValidation cross_validate(std::span<const PatientRecord> records, const LifeTable& table, const EmConfig& config,
                               int k, std::uint64_t seed) {
  const auto bg = backgrounds_at_exit(LifeTableBackground(table), records);
  return cross_validate(records, std::span<const BackgroundAtTime>(bg), config, k, seed);
}

BootstrapTarget target_population_cure() {
  return {"population_cure", [](const FittedCureModel& m, std::span<const PatientRecord> pop) {
            CompensatedSum s;
            for (const auto& r : pop) s.add(predict_cure_probability(m, r));
            return s.value() / static_cast<double>(pop.size());
          }};
}

BootstrapTarget target_profile_cure(std::string name, PatientRecord profile) {
  return {std::move(name), [profile = std::move(profile)](const FittedCureModel& m, std::span<const PatientRecord>) {
            return predict_cure_probability(m, profile);
          }};
}

BootstrapTarget target_profile_median(std::string name, PatientRecord profile) {
  return {std::move(name), [profile = std::move(profile)](const FittedCureModel& m, std::span<const PatientRecord>) {
            const WeibullParams p = predict_weibull(m, profile);
            return median_survival_fatal(per_year(p.lambda), p.beta);
          }};
}

BootstrapTarget target_profile_time_to_cure(std::string name, PatientRecord profile, double alpha) {
  return {std::move(name),
          [profile = std::move(profile), alpha](const FittedCureModel& m, std::span<const PatientRecord>) {
            const WeibullParams p = predict_weibull(m, profile);
            return time_to_cure(per_year(p.lambda), p.beta, alpha);
          }};
}

BootstrapTarget target_gamma(Eigen::Index j) {
  return {"gamma[" + std::to_string(j) + "]",
          [j](const FittedCureModel& m, std::span<const PatientRecord>) { return m.regression.gamma[j]; }};
}

BootstrapTarget target_xi(Eigen::Index j) {
  return {"xi[" + std::to_string(j) + "]",
          [j](const FittedCureModel& m, std::span<const PatientRecord>) { return m.regression.xi[j]; }};
}

std::pair<double, double> percentile_interval(std::vector<double> values, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InputError("confidence level must lie in (0, 1)");
  std::erase_if(values, [](double v) { return !std::isfinite(v); });
  if (values.empty()) return {kNaN, kNaN};
  std::sort(values.begin(), values.end());
  const auto m = values.size();
  auto k = static_cast<std::size_t>(std::ceil(static_cast<double>(m) * (1.0 - level) / 2.0 - 1e-12));
  k = std::clamp<std::size_t>(k, 1, (m + 1) / 2);
  return {values[k - 1], values[m - k]};
}

BootstrapResult bootstrap_ci(std::span<const PatientRecord> records, std::span<const BackgroundAtTime> backgrounds,
                             const EmConfig& config, int replicates, double level,
                             const std::vector<BootstrapTarget>& targets, std::uint64_t seed) {
  if (replicates < 1) throw InputError("bootstrap needs at least one replicate");
  if (records.size() != backgrounds.size()) throw InputError("records and backgrounds are not aligned");
  if (targets.empty()) throw InputError("no bootstrap targets");
  const FittedCureModel original = fit_em(records, backgrounds, config);

  const std::size_t n = records.size();
  const std::size_t b_count = static_cast<std::size_t>(replicates);
  BootstrapResult out;
  out.requested = replicates;
  out.draws.assign(targets.size(), std::vector<double>(b_count, kNaN));
  parallel_for(b_count, worker_count(), [&](std::size_t b) {
    const std::uint64_t s = derive_seed(seed, b);
    std::mt19937_64 rng(s);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<PatientRecord> sample;
    std::vector<BackgroundAtTime> sample_bg;
    sample.reserve(n);
    sample_bg.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = pick(rng);
      sample.push_back(records[j]);
      sample_bg.push_back(backgrounds[j]);
    }
    try {
      EmConfig c = config;
      c.seed = derive_seed(s, 1);
      const FittedCureModel fit = fit_em(sample, std::span<const BackgroundAtTime>(sample_bg), c);
      for (std::size_t t = 0; t < targets.size(); ++t) out.draws[t][b] = targets[t].evaluate(fit, records);
    } catch (const std::exception& e) {
      log_debug(std::string("bootstrap replicate failed: ") + e.what());
      for (auto& d : out.draws) d[b] = kNaN;
    }
  });

  for (std::size_t b = 0; b < b_count; ++b) {
    const bool ok = std::all_of(out.draws.begin(), out.draws.end(), [&](const auto& d) { return std::isfinite(d[b]); });
    if (!ok) ++out.failed;
  }
  out.high_failure_rate = out.failed * 10 > replicates;
  if (out.high_failure_rate)
    log_warn("bootstrap: " + std::to_string(out.failed) + " of " + std::to_string(replicates) + " refits failed");

  for (std::size_t t = 0; t < targets.size(); ++t) {
    BootstrapInterval iv;
    iv.name = targets[t].name;
    iv.estimate = targets[t].evaluate(original, records);
    const auto [lo, hi] = percentile_interval(out.draws[t], level);
    iv.lower = lo;
    iv.upper = hi;
    std::vector<double> ok;
    for (double v : out.draws[t])
      if (std::isfinite(v)) ok.push_back(v);
    iv.replicates = static_cast<int>(ok.size());
    if (ok.size() >= 2) {
      CompensatedSum s;
      for (double v : ok) s.add(v);
      const double mean = s.value() / static_cast<double>(ok.size());
      CompensatedSum ss;
      for (double v : ok) ss.add((v - mean) * (v - mean));
      iv.se = std::sqrt(ss.value() / static_cast<double>(ok.size() - 1));
    } else {
      iv.se = kNaN;
    }
    if (iv.se > 0.0) {
      iv.z = iv.estimate / iv.se;
      iv.p_value = 2.0 * normal_cdf(-std::abs(iv.z));
    } else {
      iv.z = kNaN;
      iv.p_value = kNaN;
    }
    out.intervals.push_back(std::move(iv));
  }
  return out;
}

BootstrapResult bootstrap_ci(std::span<const PatientRecord> records, const LifeTable& table, const EmConfig& config,
                             int replicates, double level, const std::vector<BootstrapTarget>& targets,
                             std::uint64_t seed) {
  const auto bg = backgrounds_at_exit(LifeTableBackground(table), records);
  return bootstrap_ci(records, std::span<const BackgroundAtTime>(bg), config, replicates, level, targets, seed);
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::vector<GroupKey> assign_groups(std::span<const PatientRecord> records, const Grouping& grouping) {
  const auto& edges = grouping.age_edges;
  if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()))
    throw InputError("age class edges must be increasing with at least two entries");
  if (!(grouping.period_width > 0.0)) throw InputError("period width must be > 0");
  if (records.empty()) return {};
  double origin = grouping.period_origin.value_or(std::floor(
      std::min_element(records.begin(), records.end(), [](const auto& a, const auto& b) {
        return a.year_dx < b.year_dx;
      })->year_dx));

  std::vector<GroupKey> keys;
  keys.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double age = records[i].age_at_dx;
    int a = -1;
    for (std::size_t e = 0; e + 1 < edges.size(); ++e)
      if ((age > edges[e] || (e == 0 && age == edges[0])) && age <= edges[e + 1]) {
        a = static_cast<int>(e);
        break;
      }
    if (a < 0) throw InputError("record " + std::to_string(i) + " (age " + fmt(age) + ") outside the age classes");
    const double offset = records[i].year_dx - origin;
    if (offset < 0.0) throw InputError("record " + std::to_string(i) + " precedes the period origin");
    const int p = static_cast<int>(std::floor(offset / grouping.period_width));
    const double p0 = origin + p * grouping.period_width;
    GroupKey key{a, p,
                 "age(" + fmt(edges[a]) + "," + fmt(edges[a + 1]) + "]|period[" + fmt(p0) + "," +
                     fmt(p0 + grouping.period_width) + ")"};
    keys.push_back(std::move(key));
  }
  return keys;
}

std::vector<GroupSummary> group_summaries(const FittedCureModel& model, std::span<const PatientRecord> records,
                                          const Grouping& grouping, std::span<const double> alphas) {
  const auto keys = assign_groups(records, grouping);
  struct Acc {
    GroupKey key;
    int count = 0;
    CompensatedSum theta, median;
    std::vector<CompensatedSum> ttc;
  };
  std::map<std::pair<int, int>, Acc> cells;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const CureIndicators ind = cure_indicators(model, records[i], alphas);
    Acc& acc = cells[{keys[i].age_class, keys[i].period_class}];
    if (acc.count == 0) {
      acc.key = keys[i];
      acc.ttc.resize(alphas.size());
    }
    ++acc.count;
    acc.theta.add(ind.theta);
    acc.median.add(ind.median_years);
    for (std::size_t a = 0; a < alphas.size(); ++a) acc.ttc[a].add(ind.time_to_cure_years[a]);
  }
  std::vector<GroupSummary> out;
  for (auto& [_, acc] : cells) {
    GroupSummary g;
    g.key = acc.key;
    g.count = acc.count;
    g.theta = acc.theta.value() / acc.count;
    g.median_years = acc.median.value() / acc.count;
    for (auto& s : acc.ttc) g.time_to_cure_years.push_back(s.value() / acc.count);
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<double> averaged_net_survival(const FittedCureModel& model, std::span<const PatientRecord> records,
                                          std::span<const double> grid_days) {
  if (records.empty()) throw InputError("no records to average over");
  std::vector<CompensatedSum> sums(grid_days.size());
  for (const auto& r : records) {
    const double theta = predict_cure_probability(model, r);
    const WeibullParams p = predict_weibull(model, r);
    for (std::size_t g = 0; g < grid_days.size(); ++g)
      sums[g].add(mixture_net_survival(theta, p.lambda, p.beta, grid_days[g]));
  }
  std::vector<double> out;
  for (auto& s : sums) out.push_back(s.value() / static_cast<double>(records.size()));
  return out;
}

}  // namespace cureweib
