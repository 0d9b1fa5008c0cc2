#pragma once

#include <cureweib/em.hpp>
#include <cureweib/inference.hpp>
#include <cureweib/records.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cureweib::cli {

struct Common {
  std::optional<std::uint64_t> seed;
  bool machine = false;
  std::filesystem::path out = ".";
};

struct LearnerFlags {
  std::string learner = "glm";
  int hidden = 4;
  double epsilon = 1e-6;
  int max_iter = 500;
  std::vector<std::string> x_cols{"age", "year_dx"};
  std::vector<std::string> y_cols{"age", "year_dx"};

  EmConfig em_config(std::uint64_t seed) const;
  CovariateMapping mapping() const { return {x_cols, y_cols}; }
};

struct SimulateArgs {
  int n = 1000;
  double tau = 30.0;
  int replicates = 0;
  std::vector<std::string> learners{"glm", "gam", "nnet"};
  int hidden = 4;
};

struct FitArgs {
  std::filesystem::path patients;
  std::filesystem::path lifetable;
  LearnerFlags learner;
};

struct PredictArgs {
  std::filesystem::path model;
  std::filesystem::path patients;
  std::vector<double> grid_years{0, 1, 2, 5, 10};
  std::vector<double> alphas{0.05, 0.01};
};

struct IndicatorArgs {
  std::filesystem::path model;
  std::filesystem::path patients;
  std::vector<double> alphas{0.05, 0.01};
  std::vector<double> age_edges{0, 55, 65, 75, 99};
  double period_width = 5.0;
};

struct BootstrapArgs {
  FitArgs fit;
  int boot = 200;
  double level = 0.95;
  std::vector<double> alphas{0.05, 0.01};
};

struct CrossvalArgs {
  FitArgs fit;
  int folds = 5;
};

struct Ederer2Args {
  std::filesystem::path patients;
  std::filesystem::path lifetable;
  std::optional<std::filesystem::path> model;
  std::vector<std::string> x_cols{"age", "year_dx"};
  std::vector<std::string> y_cols{"age", "year_dx"};
  std::vector<double> age_edges{0, 55, 65, 75, 99};
  double period_width = 5.0;
};

// Each returns the process exit code and writes its reports under common.out.
int run_simulate(const Common& common, const SimulateArgs& args);
int run_fit(const Common& common, const FitArgs& args);
int run_predict(const Common& common, const PredictArgs& args);
int run_indicators(const Common& common, const IndicatorArgs& args);
int run_bootstrap(const Common& common, const BootstrapArgs& args);
int run_crossval(const Common& common, const CrossvalArgs& args);
int run_ederer2(const Common& common, const Ederer2Args& args);

}  // namespace cureweib::cli
