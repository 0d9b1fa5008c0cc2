#include "commands.hpp"

#include <cureweib/artifact.hpp>
#include <cureweib/error.hpp>
#include <cureweib/lifetable.hpp>
#include <cureweib/log.hpp>
#include <cureweib/nonparam.hpp>
#include <cureweib/simgen.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>

namespace cureweib::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string num(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream out(dir / name);
  if (!out) throw InputError("cannot write '" + (dir / name).string() + "'");
  return out;
}

void write_json(const fs::path& dir, const std::string& name, const json& doc) {
  auto out = open_out(dir, name);
  out << doc.dump(2) << '\n';
}

std::uint64_t seed_of(const Common& c) { return c.seed.value_or(1); }

std::vector<std::string> columns(const std::vector<std::string>& names) {
  if (names.size() == 1 && names[0] == "none") return {};
  return names;
}

json scores_json(const ModelSelectionScores& s) {
  json j = {{"loglik", s.loglik}, {"df", s.df}, {"aic", s.aic}, {"bic", s.bic}, {"n", s.n},
            {"converged", s.converged}};
  if (s.cv_loglik) j["cv_loglik"] = *s.cv_loglik;
  return j;
}

void report(const Common& common, const json& summary) {
  if (common.machine)
    std::cout << summary.dump() << '\n';
  else
    std::cout << summary.dump(2) << '\n';
}

struct Cohort {
  std::vector<PatientRecord> records;
  LifeTable table;
};

Cohort load_cohort(const fs::path& patients, const fs::path& lifetable, const CovariateMapping& mapping) {
  LifeTable table = load_life_table(lifetable);
  return {ingest_patients(patients, mapping), std::move(table)};
}

std::string alpha_label(double a) { return "ttc_" + num(a); }

}  // namespace

EmConfig LearnerFlags::em_config(std::uint64_t seed) const {
  EmConfig c;
  c.epsilon = epsilon;
  c.max_iter = max_iter;
  c.learner.kind = parse_learner_kind(learner);
  c.learner.nnet.hidden_units = hidden;
  c.seed = seed;
  c.validate();
  return c;
}

int run_simulate(const Common& common, const SimulateArgs& args) {
  SimConfig sc;
  sc.n = args.n;
  sc.tau = args.tau;
  sc.seed = seed_of(common);
  sc.replicates = std::max(args.replicates, 1);
  sc.validate();

  const SimDataset ds = gen_dataset(sc);
  {
    auto out = open_out(common.out, "patients.csv");
    write_patients(out, to_patient_table(ds));
  }
  {
    auto out = open_out(common.out, "lifetable.csv");
    write_life_table(out, synthetic_life_table(sc));
  }
  {
    auto out = open_out(common.out, "truth.csv");
    out << "id,theta0,cured\n";
    for (std::size_t i = 0; i < ds.records.size(); ++i)
      out << ds.records[i].id << ',' << num(ds.theta0[static_cast<Eigen::Index>(i)]) << ',' << ds.cured[i] << '\n';
  }
  json summary = {{"command", "simulate"}, {"n", sc.n}, {"tau", sc.tau}, {"seed", sc.seed}};

  if (args.replicates > 0) {
    std::vector<NamedModel> models;
    for (const auto& name : args.learners) {
      EmConfig em;
      em.learner.kind = parse_learner_kind(name);
      em.learner.nnet.hidden_units = args.hidden;
      models.push_back({std::string(to_string(em.learner.kind)), em});
    }
    const auto rows = evaluate_replicates(sc, models);
    auto out = open_out(common.out, "errors.csv");
    out << "replicate,model,mse,mae\n";
    std::map<std::string, std::vector<double>> mse;
    int failed = 0;
    for (const auto& r : rows) {
      out << r.replicate << ',' << r.model << ',' << (r.ok ? num(r.mse) : "nan") << ','
          << (r.ok ? num(r.mae) : "nan") << '\n';
      if (r.ok)
        mse[r.model].push_back(r.mse);
      else {
        ++failed;
        log_warn("replicate " + std::to_string(r.replicate) + " model " + r.model + " failed: " + r.error);
      }
    }
    json medians = json::object();
    for (auto& [name, v] : mse) {
      std::sort(v.begin(), v.end());
      const std::size_t m = v.size();
      medians[name] = m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
    }
    summary["replicates"] = args.replicates;
    summary["failed_fits"] = failed;
    summary["median_mse"] = medians;
  }
  write_json(common.out, "simulate_summary.json", summary);
  report(common, summary);
  return 0;
}

int run_fit(const Common& common, const FitArgs& args) {
  const CovariateMapping mapping{columns(args.learner.x_cols), columns(args.learner.y_cols)};
  const EmConfig em = args.learner.em_config(seed_of(common));
  const Cohort cohort = load_cohort(args.patients, args.lifetable, mapping);
  const FittedCureModel fit = fit_em(cohort.records, cohort.table, em);

  fs::create_directories(common.out);
  save_artifact(common.out / "model.json", ModelArtifact{fit, mapping, utc_timestamp()});
  {
    auto out = open_out(common.out, "trace.csv");
    out << "iteration,loglik\n";
    for (std::size_t k = 0; k < fit.trace.size(); ++k) out << k << ',' << num(fit.trace[k]) << '\n';
  }
  {
    auto out = open_out(common.out, "posterior.csv");
    out << "id,posterior_cure,theta\n";
    for (std::size_t i = 0; i < cohort.records.size(); ++i)
      out << cohort.records[i].id << ',' << num(fit.posterior.u[static_cast<Eigen::Index>(i)]) << ','
          << num(predict_cure_probability(fit, cohort.records[i])) << '\n';
  }
  json summary = {{"command", "fit"},
                  {"learner", std::string(to_string(fit.learner.kind))},
                  {"iterations", fit.iterations},
                  {"converged", fit.converged},
                  {"scores", scores_json(information_criteria(fit))}};
  write_json(common.out, "fit_summary.json", summary);
  report(common, summary);
  return 0;
}

int run_predict(const Common& common, const PredictArgs& args) {
  const ModelArtifact art = load_artifact(args.model);
  const auto records = ingest_patients(args.patients, art.covariates);
  for (double g : args.grid_years)
    if (!(g >= 0.0)) throw InputError("prediction grid times must be >= 0");

  auto out = open_out(common.out, "predictions.csv");
  out << "id,theta,lambda_per_year,beta,median_years";
  for (double a : args.alphas) out << ',' << alpha_label(a);
  for (double g : args.grid_years) out << ",S_" << num(g);
  out << '\n';
  for (const auto& r : records) {
    const CureIndicators ind = cure_indicators(art.model, r, args.alphas);
    const WeibullParams p = predict_weibull(art.model, r);
    out << r.id << ',' << num(ind.theta) << ',' << num(p.lambda * kDaysPerYear) << ',' << num(p.beta) << ','
        << num(ind.median_years);
    for (double t : ind.time_to_cure_years) out << ',' << num(t);
    for (double g : args.grid_years) out << ',' << num(mixture_net_survival(ind.theta, p.lambda, p.beta, g * kDaysPerYear));
    out << '\n';
  }
  report(common, {{"command", "predict"}, {"patients", records.size()}});
  return 0;
}

int run_indicators(const Common& common, const IndicatorArgs& args) {
  const ModelArtifact art = load_artifact(args.model);
  const auto records = ingest_patients(args.patients, art.covariates);
  Grouping grouping;
  grouping.age_edges = args.age_edges;
  grouping.period_width = args.period_width;
  const auto cells = group_summaries(art.model, records, grouping, args.alphas);

  json cured = json::array(), medians = json::array(), ttc = json::array();
  auto out = open_out(common.out, "indicators.csv");
  out << "group,n,theta,median_years";
  for (double a : args.alphas) out << ',' << alpha_label(a);
  out << '\n';
  for (const auto& c : cells) {
    cured.push_back({{"group", c.key.label}, {"n", c.count}, {"theta", c.theta}});
    medians.push_back({{"group", c.key.label}, {"n", c.count}, {"years", c.median_years}});
    json per_alpha = json::object();
    for (std::size_t a = 0; a < args.alphas.size(); ++a) per_alpha[num(args.alphas[a])] = c.time_to_cure_years[a];
    ttc.push_back({{"group", c.key.label}, {"n", c.count}, {"years_by_alpha", per_alpha}});
    out << '"' << c.key.label << '"' << ',' << c.count << ',' << num(c.theta) << ',' << num(c.median_years);
    for (double t : c.time_to_cure_years) out << ',' << num(t);
    out << '\n';
  }
  const json doc = {{"command", "indicators"},
                    {"proportion_cured", cured},
                    {"median_survival_fatal_years", medians},
                    {"time_to_cure_years", ttc}};
  write_json(common.out, "indicators.json", doc);
  report(common, {{"command", "indicators"}, {"groups", cells.size()}});
  return 0;
}

int run_bootstrap(const Common& common, const BootstrapArgs& args) {
  const CovariateMapping mapping{columns(args.fit.learner.x_cols), columns(args.fit.learner.y_cols)};
  const EmConfig em = args.fit.learner.em_config(seed_of(common));
  const Cohort cohort = load_cohort(args.fit.patients, args.fit.lifetable, mapping);

  std::vector<BootstrapTarget> targets{target_population_cure()};
  const auto p = cohort.records[0].survival_covariates.size();
  for (Eigen::Index j = 0; j < p; ++j) targets.push_back(target_gamma(j));
  for (Eigen::Index j = 0; j < p; ++j) targets.push_back(target_xi(j));

  // Group-averaged indicators over the original cohort.
  const auto keys = assign_groups(cohort.records, Grouping{});
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < keys.size(); ++i) members[keys[i].label].push_back(i);
  for (const auto& [label, idx] : members) {
    targets.push_back({"theta|" + label, [idx](const FittedCureModel& m, std::span<const PatientRecord> pop) {
                         double s = 0.0;
                         for (auto i : idx) s += predict_cure_probability(m, pop[i]);
                         return s / static_cast<double>(idx.size());
                       }});
    for (double a : args.alphas) {
      targets.push_back({alpha_label(a) + "|" + label,
                         [idx, a](const FittedCureModel& m, std::span<const PatientRecord> pop) {
                           double s = 0.0;
                           for (auto i : idx) {
                             const WeibullParams w = predict_weibull(m, pop[i]);
                             s += time_to_cure(w.lambda * kDaysPerYear, w.beta, a);
                           }
                           return s / static_cast<double>(idx.size());
                         }});
    }
  }

  const BootstrapResult res =
      bootstrap_ci(cohort.records, cohort.table, em, args.boot, args.level, targets, seed_of(common));
  auto out = open_out(common.out, "bootstrap.csv");
  out << "target,estimate,lower,upper,se,z,p_value,replicates\n";
  for (const auto& iv : res.intervals)
    out << '"' << iv.name << '"' << ',' << num(iv.estimate) << ',' << num(iv.lower) << ',' << num(iv.upper) << ','
        << num(iv.se) << ',' << num(iv.z) << ',' << num(iv.p_value) << ',' << iv.replicates << '\n';
  json summary = {{"command", "bootstrap"},
                  {"replicates", res.requested},
                  {"failed", res.failed},
                  {"high_failure_rate", res.high_failure_rate},
                  {"level", args.level}};
  write_json(common.out, "bootstrap_summary.json", summary);
  report(common, summary);
  return 0;
}

int run_crossval(const Common& common, const CrossvalArgs& args) {
  const CovariateMapping mapping{columns(args.fit.learner.x_cols), columns(args.fit.learner.y_cols)};
  const EmConfig em = args.fit.learner.em_config(seed_of(common));
  const Cohort cohort = load_cohort(args.fit.patients, args.fit.lifetable, mapping);
  const FittedCureModel fit = fit_em(cohort.records, cohort.table, em);
  ModelSelectionScores scores = information_criteria(fit);
  const CrossValidation cv = cross_validate(cohort.records, cohort.table, em, args.folds, seed_of(common));
  scores.cv_loglik = cv.mean_loglik;
  json summary = {{"command", "crossval"},
                  {"learner", std::string(to_string(fit.learner.kind))},
                  {"folds", args.folds},
                  {"fold_loglik", cv.fold_loglik},
                  {"failed_folds", cv.failed_folds},
                  {"scores", scores_json(scores)}};
  write_json(common.out, "crossval.json", summary);
  report(common, summary);
  return 0;
}

int run_ederer2(const Common& common, const Ederer2Args& args) {
  std::optional<ModelArtifact> art;
  if (args.model) art = load_artifact(*args.model);
  const CovariateMapping mapping = art ? art->covariates : CovariateMapping{columns(args.x_cols), columns(args.y_cols)};
  const Cohort cohort = load_cohort(args.patients, args.lifetable, mapping);
  const LifeTableBackground background(cohort.table);

  Grouping grouping;
  grouping.age_edges = args.age_edges;
  grouping.period_width = args.period_width;
  const auto keys = assign_groups(cohort.records, grouping);
  std::vector<std::pair<std::string, std::vector<PatientRecord>>> groups{{"all", cohort.records}};
  std::map<std::string, std::vector<PatientRecord>> by_label;
  for (std::size_t i = 0; i < keys.size(); ++i) by_label[keys[i].label].push_back(cohort.records[i]);
  for (auto& [label, recs] : by_label) groups.emplace_back(label, std::move(recs));

  std::vector<PlotRow> rows;
  bool truncated = false;
  for (const auto& [label, recs] : groups) {
    double last = 0.0;
    for (const auto& r : recs) last = std::max(last, r.time);
    const auto grid = monthly_grid(last);
    if (grid.empty()) continue;
    const RsCurve curve = ederer2(recs, background, grid);
    truncated = truncated || curve.truncated;
    for (std::size_t g = 0; g < curve.grid.size(); ++g)
      rows.push_back({label, "ederer2", curve.grid[g] / kDaysPerYear, curve.estimate[g], curve.lower[g], curve.upper[g]});
    if (art) {
      const auto model_curve = averaged_net_survival(art->model, recs, grid);
      const std::string source = "model:" + std::string(to_string(art->model.learner.kind));
      for (std::size_t g = 0; g < grid.size(); ++g)
        rows.push_back({label, source, grid[g] / kDaysPerYear, model_curve[g], std::nullopt, std::nullopt});
    }
  }
  auto out = open_out(common.out, "plot_data.csv");
  write_plot_data(out, rows);
  report(common, {{"command", "ederer2"}, {"groups", groups.size()}, {"rows", rows.size()}, {"truncated", truncated}});
  return 0;
}

}  // namespace cureweib::cli
