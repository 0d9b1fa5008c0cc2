#include <cureweib/em.hpp>
#include <cureweib/learners.hpp>
#include <cureweib/nonparam.hpp>
#include <cureweib/simgen.hpp>
#include <cureweib/survival.hpp>

#include <benchmark/benchmark.h>

using namespace cureweib;

namespace {

struct Cohort {
  SimDataset data;
  std::vector<PatientRecord> scaled;
  std::vector<BackgroundAtTime> bg;
  Standardization scaling;
};

Cohort make_cohort(int n) {
  SimConfig cfg;
  cfg.n = n;
  cfg.seed = 42;
  Cohort c{gen_dataset(cfg), {}, {}, {}};
  c.bg = backgrounds_at_exit(WeibullBackground(cfg.lambda_b, cfg.beta_b), c.data.records);
  c.scaling = {ColumnScaling::fit(survival_design(c.data.records)), ColumnScaling::fit(cure_design(c.data.records))};
  c.scaled = standardize_records(c.data.records, c.scaling);
  return c;
}

WeibullRegression truth_regression() {
  return {Eigen::VectorXd::Constant(1, std::log(0.5 / kDaysPerYear)), Eigen::VectorXd::Constant(1, std::log(1.2))};
}

void BM_LogLikelihood(benchmark::State& state) {
  const Cohort c = make_cohort(static_cast<int>(state.range(0)));
  const std::vector<double> theta(c.scaled.size(), 0.4);
  const auto reg = truth_regression();
  for (auto _ : state) benchmark::DoNotOptimize(log_likelihood(c.scaled, reg, theta, c.bg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogLikelihood)->Arg(1000)->Arg(10000);

void BM_EStep(benchmark::State& state) {
  const Cohort c = make_cohort(static_cast<int>(state.range(0)));
  const Eigen::MatrixXd y = cure_design(c.scaled);
  CureLearnerSpec spec;
  const LearnerState learner = fit_learner(spec, {y, Eigen::VectorXd::Constant(y.rows(), 0.4)});
  const auto reg = truth_regression();
  for (auto _ : state) benchmark::DoNotOptimize(e_step(c.scaled, c.bg, learner, reg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EStep)->Arg(1000)->Arg(10000);

void BM_LearnerFit(benchmark::State& state) {
  const Cohort c = make_cohort(1000);
  const Eigen::MatrixXd y = cure_design(c.scaled);
  Eigen::VectorXd u(y.rows());
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = c.data.theta0[i];
  CureLearnerSpec spec;
  spec.kind = static_cast<LearnerKind>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_learner(spec, {y, u}));
  state.SetLabel(std::string(to_string(spec.kind)));
}
BENCHMARK(BM_LearnerFit)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_WeibullStep(benchmark::State& state) {
  const Cohort c = make_cohort(1000);
  PosteriorVector post{Eigen::VectorXd::Constant(1000, 0.4)};
  const auto reg0 = initial_regression(c.scaled);
  for (auto _ : state) benchmark::DoNotOptimize(m_step_weibull(post, c.scaled, c.bg, reg0, 400));
}
BENCHMARK(BM_WeibullStep)->Unit(benchmark::kMillisecond);

void BM_FitEm(benchmark::State& state) {
  const Cohort c = make_cohort(1000);
  EmConfig cfg;
  cfg.learner.kind = static_cast<LearnerKind>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_em(c.data.records, c.bg, cfg));
  state.SetLabel(std::string(to_string(cfg.learner.kind)));
}
BENCHMARK(BM_FitEm)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_Ederer2(benchmark::State& state) {
  const Cohort c = make_cohort(static_cast<int>(state.range(0)));
  const LifeTable table = synthetic_life_table(SimConfig{});
  const auto grid = monthly_grid(15.0 * kDaysPerYear);
  for (auto _ : state) benchmark::DoNotOptimize(ederer2(c.data.records, table, grid));
}
BENCHMARK(BM_Ederer2)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
