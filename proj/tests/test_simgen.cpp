#include "support.hpp"

#include <cureweib/error.hpp>
#include <cureweib/numeric.hpp>
#include <cureweib/simgen.hpp>

#include <doctest.h>

#include <cmath>

using namespace cureweib;

TEST_CASE("period split puts n/3 patients in the early half") {
  SimConfig cfg;
  cfg.n = 30;
  std::mt19937_64 rng(3);
  // gen_covariates enforces n >= 10; the split rule is n / 3 early draws.
  const auto c = gen_covariates(cfg, rng);
  int early = 0;
  for (Eigen::Index i = 0; i < c.period_raw.size(); ++i) early += c.period_raw[i] < cfg.tau / 2.0;
  CHECK(early == 10);
  for (Eigen::Index i = 0; i < 10; ++i) CHECK(c.period_raw[i] < 15.0);
  for (Eigen::Index i = 10; i < 30; ++i) CHECK(c.period_raw[i] >= 15.0);
}

TEST_CASE("raw age averages 65 in a large sample") {
  SimConfig cfg;
  cfg.n = 100000;
  cfg.seed = 11;
  const auto c = gen_covariates(cfg);
  CHECK(std::fabs(c.age_raw.mean() - 65.0) < 0.1);
  CHECK(c.age.mean() == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
  const double var = c.age.array().square().sum() / (cfg.n - 1.0);
  CHECK(var == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(c.sex.mean() == doctest::Approx(0.48).epsilon(0.02));
  for (Eigen::Index i = 0; i < c.sex.size(); ++i) CHECK((c.sex[i] == 0.0 || c.sex[i] == 1.0));
}

TEST_CASE("true cure probability formula") {
  CHECK(true_cure_probability(0, 0, 0) == doctest::Approx(0.622459).epsilon(1e-6));
  CHECK(true_cure_probability(0, 1, 0) == doctest::Approx(0.645656).epsilon(1e-6));
  CHECK(true_cure_probability(10, 0, 0) < 1e-100);
  const double a = 0.7, s = 1.0, p = -1.3;
  const double eta = 0.5 - 2.5 * a + 0.1 * s - 2.8 * a * a + 0.8 * p * p + 1.2 * std::fabs(p) * a;
  CHECK(true_cure_probability(a, s, p) == doctest::Approx(1.0 / (1.0 + std::exp(-eta))).epsilon(1e-14));
}

TEST_CASE("datasets are reproducible from the seed") {
  SimConfig cfg;
  cfg.n = 200;
  cfg.seed = 5;
  const auto a = gen_dataset(cfg);
  const auto b = gen_dataset(cfg);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].time == b.records[i].time);
    CHECK(a.records[i].status == b.records[i].status);
    CHECK(a.records[i].cure_covariates == b.records[i].cure_covariates);
  }
  CHECK(a.theta0 == b.theta0);
  cfg.seed = 6;
  CHECK_FALSE(gen_dataset(cfg).theta0 == a.theta0);
}

TEST_CASE("observed times respect administrative censoring") {
  SimConfig cfg;
  cfg.n = 2000;
  cfg.seed = 9;
  const auto ds = gen_dataset(cfg);
  int events = 0;
  for (int i = 0; i < cfg.n; ++i) {
    const auto& r = ds.records[static_cast<std::size_t>(i)];
    const double bound = std::max((cfg.tau - ds.covariates.period_raw[i]) * kDaysPerYear, kMinTimeDays);
    CHECK(r.time <= bound * (1 + 1e-15));
    if (r.status == 0) CHECK(r.time == doctest::Approx(bound).epsilon(1e-14));
    events += r.status;
    CHECK(ds.theta0[i] > 0.0);
    CHECK(ds.theta0[i] < 1.0);
  }
  CHECK(events > 0);
}

TEST_CASE("forcing everyone cured leaves only background deaths") {
  SimConfig cfg;
  cfg.n = 3000;
  cfg.seed = 4;
  cfg.force_theta = 1.0;
  const auto ds = gen_dataset(cfg);
  int deaths = 0;
  for (int i = 0; i < cfg.n; ++i) {
    CHECK(ds.cured[static_cast<std::size_t>(i)] == 1);
    deaths += ds.records[static_cast<std::size_t>(i)].status;
  }
  // P(background death within follow-up) averages roughly 1 - exp(-(0.02 * 20)^2.2) ~ 0.11.
  CHECK(deaths > 0);
  CHECK(static_cast<double>(deaths) / cfg.n < 0.25);
}

TEST_CASE("very high excess mortality kills the uncured at once") {
  SimConfig cfg;
  cfg.n = 500;
  cfg.seed = 12;
  cfg.lambda_u = 1e6;
  const auto ds = gen_dataset(cfg);
  for (int i = 0; i < cfg.n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (ds.cured[k] == 0) {
      CHECK(ds.records[k].status == 1);
      CHECK(ds.records[k].time == kMinTimeDays);
    }
  }
}

TEST_CASE("synthetic life table integrates the background hazard at whole years") {
  SimConfig cfg;
  const LifeTable t = synthetic_life_table(cfg);
  const LifeTableBackground from_table(t);
  const WeibullBackground exact(cfg.lambda_b, cfg.beta_b);
  const auto p = testing::make_record(1.0, 0, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1), 64.5, 2000);
  for (int k = 1; k <= 30; ++k) {
    const double d = k * kDaysPerYear;
    CHECK(from_table.cumulative_hazard(p, d) == doctest::Approx(exact.cumulative_hazard(p, d)).epsilon(1e-12));
  }
}

TEST_CASE("exact Weibull background") {
  const WeibullBackground bg(0.5, 1.0);
  const auto p = testing::make_record(1.0, 0);
  const auto v = bg.at(p, kDaysPerYear);
  CHECK(v.s0 == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  CHECK(v.h0 == doctest::Approx(0.5 / kDaysPerYear).epsilon(1e-14));
}

TEST_CASE("cure error summaries") {
  Eigen::VectorXd truth(4);
  truth << 0.1, 0.4, 0.5, 0.8;
  const auto zero = cure_errors(truth, truth);
  CHECK(zero.mse == 0.0);
  CHECK(zero.mae == 0.0);
  const auto off = cure_errors(truth.array() + 0.1, truth);
  CHECK(off.mae == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(off.mse == doctest::Approx(0.01).epsilon(1e-12));
  CHECK_THROWS_AS(cure_errors(Eigen::VectorXd(2), truth), InputError);
}

TEST_CASE("replicate evaluation is deterministic and records every model") {
  SimConfig cfg;
  cfg.n = 150;
  cfg.replicates = 3;
  cfg.seed = 21;
  NamedModel glm{"glm", {}};
  glm.em.epsilon = 1e-5;
  const std::vector<NamedModel> models{glm};
  const auto a = evaluate_replicates(cfg, models);
  const auto b = evaluate_replicates(cfg, models);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].replicate == static_cast<int>(i));
    CHECK(a[i].model == "glm");
    CHECK(a[i].ok);
    CHECK(a[i].mse == b[i].mse);
    CHECK(a[i].mae == b[i].mae);
    CHECK(a[i].mse <= a[i].mae);
  }
}

TEST_CASE("configuration validation") {
  SimConfig cfg;
  cfg.n = 5;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = SimConfig{};
  cfg.tau = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = SimConfig{};
  cfg.lambda_b = -1.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}
