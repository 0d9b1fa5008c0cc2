#include "support.hpp"

#include <cureweib/artifact.hpp>
#include <cureweib/error.hpp>
#include <cureweib/records.hpp>
#include <cureweib/simgen.hpp>

#include <doctest.h>

#include <sstream>

using namespace cureweib;

namespace {

const char* kGood =
    "id,time_days,status,age,sex,year_dx,stage\n"
    "a,100,1,61.5,F,1995,1\n"
    "b,2000,0,70,M,1998,2\n"
    "c,0,1,55,1,2001,3\n";

}  // namespace

TEST_CASE("reads a well-formed patient table") {
  std::istringstream in(kGood);
  const auto t = read_patients(in);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.extra_names == std::vector<std::string>{"stage"});
  CHECK(t.rows[0].sex == Sex::female);
  CHECK(t.rows[1].sex == Sex::male);
  CHECK(t.rows[2].sex == Sex::male);
  CHECK(t.rows[2].time_days == kMinTimeDays);  // zero imputed
  CHECK(t.rows[2].status == 1);
  CHECK(t.rows[1].extras == std::vector<double>{2.0});
}

TEST_CASE("row-addressed ingestion errors") {
  std::string text = "id,time_days,status,age,sex,year_dx\n";
  for (int i = 1; i <= 6; ++i) text += std::to_string(i) + ",10,0,50,F,2000\n";
  text += "7,10,2,50,F,2000\n";
  std::istringstream in(text);
  try {
    read_patients(in);
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("row 7") != std::string::npos);
  }
  std::istringstream missing("id,time_days,status,age,sex\n1,10,0,50,F\n");
  CHECK_THROWS_AS(read_patients(missing), InputError);
  std::istringstream bad("id,time_days,status,age,sex,year_dx\n1,ten,0,50,F,2000\n");
  CHECK_THROWS_AS(read_patients(bad), InputError);
  std::istringstream negative("id,time_days,status,age,sex,year_dx\n1,-1,0,50,F,2000\n");
  CHECK_THROWS_AS(read_patients(negative), InputError);
}

TEST_CASE("covariate mapping builds intercept-led designs") {
  std::istringstream in(kGood);
  const auto t = read_patients(in);
  const auto r = to_records(t, CovariateMapping{{}, {"age", "stage", "sex"}});
  CHECK(r[1].survival_covariates.size() == 1);
  CHECK(r[1].cure_covariates == Eigen::Vector4d(1.0, 70.0, 2.0, 1.0));
  CHECK(r[0].age_at_dx == 61.5);
  CHECK(r[0].year_dx == 1995.0);
  CHECK_THROWS_AS(to_records(t, CovariateMapping{{"grade"}, {}}), InputError);
}

TEST_CASE("patient tables round-trip") {
  std::istringstream in(kGood);
  const auto t = read_patients(in);
  std::ostringstream out;
  write_patients(out, t);
  std::istringstream again(out.str());
  const auto u = read_patients(again);
  REQUIRE(u.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(u.rows[i].id == t.rows[i].id);
    CHECK(u.rows[i].time_days == t.rows[i].time_days);
    CHECK(u.rows[i].age == t.rows[i].age);
    CHECK(u.rows[i].extras == t.rows[i].extras);
  }
}

TEST_CASE("artifacts round-trip byte for byte for every learner") {
  SimConfig sim;
  sim.n = 200;
  sim.seed = 31;
  const auto ds = gen_dataset(sim);
  const auto bg = backgrounds_at_exit(WeibullBackground(sim.lambda_b, sim.beta_b), ds.records);
  for (auto kind : {LearnerKind::glm_logit, LearnerKind::additive, LearnerKind::neural_net}) {
    EmConfig cfg;
    cfg.learner.kind = kind;
    cfg.max_iter = 5;
    ModelArtifact a{fit_em(ds.records, bg, cfg), simulation_mapping(), utc_timestamp()};
    std::ostringstream first;
    save_artifact(first, a);
    std::istringstream in(first.str());
    const ModelArtifact b = load_artifact(in);
    std::ostringstream second;
    save_artifact(second, b);
    CHECK(first.str() == second.str());
    CHECK(artifact_fingerprint(a) == artifact_fingerprint(b));
    for (int i = 0; i < 20; ++i)
      CHECK(predict_cure_probability(b.model, ds.records[static_cast<std::size_t>(i)]) ==
            predict_cure_probability(a.model, ds.records[static_cast<std::size_t>(i)]));
    CHECK(b.model.trace == a.model.trace);
    CHECK(b.model.scaling.cure == a.model.scaling.cure);
  }
}

TEST_CASE("artifact schema version is checked") {
  SimConfig sim;
  sim.n = 50;
  const auto ds = gen_dataset(sim);
  const auto bg = backgrounds_at_exit(WeibullBackground(sim.lambda_b, sim.beta_b), ds.records);
  EmConfig cfg;
  cfg.max_iter = 3;
  ModelArtifact a{fit_em(ds.records, bg, cfg), simulation_mapping(), ""};
  auto doc = to_json(a);
  doc["schema_version"] = kArtifactSchemaVersion + 1;
  CHECK_THROWS_AS(artifact_from_json(doc), InputError);
  std::istringstream junk("{\"not\": \"an artifact\"}");
  CHECK_THROWS_AS(load_artifact(junk), InputError);
}

TEST_CASE("plot data round-trips with quoted groups and missing bounds") {
  const std::vector<PlotRow> rows{{"age(55,65]|period[1990,1995)", "ederer2", 1.5, 0.8, 0.7, 0.9},
                                  {"all", "model:glm", 2.0, 0.75, std::nullopt, std::nullopt}};
  std::ostringstream out;
  write_plot_data(out, rows);
  CHECK(out.str().rfind("group,source,time_years,value,lo,hi\n", 0) == 0);
  std::istringstream in(out.str());
  CHECK(read_plot_data(in) == rows);
}
