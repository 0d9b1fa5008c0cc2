#include "commands.hpp"

#include <cureweib/error.hpp>
#include <cureweib/log.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>

namespace {

using namespace cureweib::cli;

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw cureweib::InputError("not a number in list: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

void add_learner_flags(CLI::App* cmd, LearnerFlags& f) {
  cmd->add_option("--learner", f.learner, "Cure learner")->check(CLI::IsMember({"glm", "gam", "nnet"}));
  cmd->add_option("--hidden", f.hidden, "Hidden units of the neural network")->check(CLI::Range(1, 64));
  cmd->add_option("--epsilon", f.epsilon, "EM stopping threshold on the log-likelihood change");
  cmd->add_option("--max-iter", f.max_iter, "Maximum EM iterations");
  cmd->add_option("--x-cols", f.x_cols, "Survival covariate columns ('none' for intercept only)")->delimiter(',');
  cmd->add_option("--y-cols", f.y_cols, "Cure covariate columns ('none' for intercept only)")->delimiter(',');
}

void add_cohort_flags(CLI::App* cmd, FitArgs& a) {
  cmd->add_option("--patients", a.patients, "Patients CSV")->required()->check(CLI::ExistingFile);
  cmd->add_option("--lifetable", a.lifetable, "Life-table CSV")->required()->check(CLI::ExistingFile);
  add_learner_flags(cmd, a.learner);
}

int fail(const std::string& code, const std::string& message, int status) {
  std::string one_line = message;
  for (auto& c : one_line)
    if (c == '\n') c = ' ';
  std::cerr << "error code=" << code << " " << one_line << '\n';
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixture cure models for relative survival with a Weibull excess hazard"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "cureweib 0.1.0");

  Common common;
  std::uint64_t seed = 1;
  bool verbose = false, quiet = false;
  auto* seed_opt = app.add_option("--seed", seed, "Master random seed");
  auto* machine = app.add_flag("--machine", common.machine, "Machine-readable one-line JSON output");
  machine->needs(seed_opt);
  app.add_option("--out", common.out, "Output directory");
  app.add_flag("-v,--verbose", verbose, "Verbose logging");
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");
  app.fallthrough();

  SimulateArgs sim;
  std::string learners = "glm,gam,nnet";
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic cohort (and optionally replicate errors)");
  simulate->add_option("--n", sim.n, "Cohort size");
  simulate->add_option("--tau", sim.tau, "Follow-up horizon in years");
  simulate->add_option("--replicates", sim.replicates, "Replicates for the cure-probability error table");
  simulate->add_option("--learners", learners, "Learners for the error table");
  simulate->add_option("--hidden", sim.hidden, "Hidden units of the neural network");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a mixture cure model by EM");
  add_cohort_flags(fit_cmd, fit);

  PredictArgs pred;
  std::string pred_grid = "0,1,2,5,10", pred_alpha = "0.05,0.01";
  auto* predict = app.add_subcommand("predict", "Per-patient predictions from a saved model");
  predict->add_option("--model", pred.model, "Model artifact")->required()->check(CLI::ExistingFile);
  predict->add_option("--patients", pred.patients, "Patients CSV")->required()->check(CLI::ExistingFile);
  predict->add_option("--grid", pred_grid, "Times in years for S(t)");
  predict->add_option("--alpha", pred_alpha, "Time-to-cure levels");

  IndicatorArgs ind;
  std::string ind_alpha = "0.05,0.01", ind_edges = "0,55,65,75,99";
  auto* indicators = app.add_subcommand("indicators", "Cure indicators by age and period class");
  indicators->add_option("--model", ind.model, "Model artifact")->required()->check(CLI::ExistingFile);
  indicators->add_option("--patients", ind.patients, "Patients CSV")->required()->check(CLI::ExistingFile);
  indicators->add_option("--alpha", ind_alpha, "Time-to-cure levels");
  indicators->add_option("--age-edges", ind_edges, "Age class edges");
  indicators->add_option("--period-width", ind.period_width, "Period class width in years");

  BootstrapArgs boot;
  std::string boot_alpha = "0.05,0.01";
  auto* bootstrap = app.add_subcommand("bootstrap", "Percentile bootstrap intervals");
  add_cohort_flags(bootstrap, boot.fit);
  bootstrap->add_option("--boot", boot.boot, "Bootstrap replicates")->check(CLI::PositiveNumber);
  bootstrap->add_option("--level", boot.level, "Confidence level");
  bootstrap->add_option("--alpha", boot_alpha, "Time-to-cure levels");

  CrossvalArgs cv;
  auto* crossval = app.add_subcommand("crossval", "AIC, BIC and k-fold cross-validated log-likelihood");
  add_cohort_flags(crossval, cv.fit);
  crossval->add_option("--folds", cv.folds, "Number of folds")->check(CLI::Range(2, 1000000));

  Ederer2Args ed;
  std::string ed_edges = "0,55,65,75,99";
  std::string ed_model;
  auto* ederer = app.add_subcommand("ederer2", "Ederer II curves (and model curves) as tidy plot data");
  ederer->add_option("--patients", ed.patients, "Patients CSV")->required()->check(CLI::ExistingFile);
  ederer->add_option("--lifetable", ed.lifetable, "Life-table CSV")->required()->check(CLI::ExistingFile);
  ederer->add_option("--model", ed_model, "Model artifact for overlay curves")->check(CLI::ExistingFile);
  ederer->add_option("--x-cols", ed.x_cols, "Survival covariate columns")->delimiter(',');
  ederer->add_option("--y-cols", ed.y_cols, "Cure covariate columns")->delimiter(',');
  ederer->add_option("--age-edges", ed_edges, "Age class edges");
  ederer->add_option("--period-width", ed.period_width, "Period class width in years");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  cureweib::set_log_level(quiet ? cureweib::LogLevel::quiet
                                : verbose ? cureweib::LogLevel::debug : cureweib::LogLevel::warn);
  if (*seed_opt) common.seed = seed;

  try {
    if (*simulate) {
      sim.learners.clear();
      std::stringstream ss(learners);
      for (std::string s; std::getline(ss, s, ',');)
        if (!s.empty()) sim.learners.push_back(s);
      return run_simulate(common, sim);
    }
    if (*fit_cmd) return run_fit(common, fit);
    if (*predict) {
      pred.grid_years = parse_list(pred_grid);
      pred.alphas = parse_list(pred_alpha);
      return run_predict(common, pred);
    }
    if (*indicators) {
      ind.alphas = parse_list(ind_alpha);
      ind.age_edges = parse_list(ind_edges);
      return run_indicators(common, ind);
    }
    if (*bootstrap) {
      boot.alphas = parse_list(boot_alpha);
      return run_bootstrap(common, boot);
    }
    if (*crossval) return run_crossval(common, cv);
    if (*ederer) {
      ed.age_edges = parse_list(ed_edges);
      if (!ed_model.empty()) ed.model = ed_model;
      return run_ederer2(common, ed);
    }
  } catch (const cureweib::InputError& e) {
    return fail(e.code(), e.what(), 2);
  } catch (const cureweib::RangeError& e) {
    return fail(e.code(), e.what(), 2);
  } catch (const cureweib::Error& e) {
    return fail(e.code(), e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}
