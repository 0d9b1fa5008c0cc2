#include "support.hpp"

#include <cureweib/error.hpp>
#include <cureweib/nonparam.hpp>

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace cureweib;

namespace {

// Product-limit estimate by enumerating the distinct death times up to g.
double km_oracle(const std::vector<PatientRecord>& records, double g) {
  std::set<double> times;
  for (const auto& r : records)
    if (r.status == 1 && r.time <= g) times.insert(r.time);
  double s = 1.0;
  for (double t : times) {
    int d = 0, y = 0;
    for (const auto& r : records) {
      if (r.time >= t) ++y;
      if (r.time == t && r.status == 1) ++d;
    }
    s *= 1.0 - static_cast<double>(d) / y;
  }
  return s;
}

}  // namespace

TEST_CASE("no deaths and no population mortality") {
  std::vector<PatientRecord> records;
  for (int i = 1; i <= 5; ++i) records.push_back(testing::make_record(100.0 * i, 0));
  const std::vector<double> grid{50, 150, 300, 500};
  const RsCurve c = ederer2(records, LifeTable::constant(0.0), grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(c.estimate[i] == 1.0);
    CHECK(c.lower[i] == 1.0);
    CHECK(c.upper[i] == 1.0);
  }
  CHECK(c.at_risk == std::vector<int>{5, 4, 3, 1});
  CHECK_FALSE(c.truncated);
}

TEST_CASE("no deaths with constant population hazard") {
  std::vector<PatientRecord> records;
  for (int i = 0; i < 10; ++i) records.push_back(testing::make_record(3650.0, 0));
  const std::vector<double> grid{365.25, 1826.25, 3600.0};
  const RsCurve c = ederer2(records, LifeTable::constant(0.01), grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(c.estimate[i] == doctest::Approx(std::exp(0.01 * grid[i] / 365.25)).epsilon(1e-12));
}

TEST_CASE("three-patient cohort against the product-limit oracle") {
  const std::vector<PatientRecord> records{testing::make_record(100.0, 0), testing::make_record(200.0, 1),
                                           testing::make_record(300.0, 0)};
  const std::vector<double> grid{50, 150, 250, 300};
  const RsCurve c = ederer2(records, LifeTable::constant(0.0), grid);
  CHECK(c.estimate == std::vector<double>{1.0, 1.0, 0.5, 0.5});
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(c.estimate[i] == km_oracle(records, grid[i]));
}

TEST_CASE("zero population hazard reduces to Kaplan-Meier") {
  std::mt19937_64 rng(101);
  for (int k = 0; k < 20; ++k) {
    const auto records = testing::random_cohort(rng, 5 + k);
    const auto grid = monthly_grid(2000.0);
    const RsCurve c = ederer2(records, LifeTable::constant(0.0), grid);
    for (std::size_t i = 0; i < c.grid.size(); ++i) CHECK(c.estimate[i] == km_oracle(records, c.grid[i]));
  }
}

TEST_CASE("expected survival averages the hazard of those at risk") {
  // Two patients; one leaves at 1 year. Rates 0.02 (age 50) vs 0.2 (age 80).
  std::vector<double> f(111 * 11), m(111 * 11);
  for (int a = 0; a <= 110; ++a)
    for (int y = 0; y <= 10; ++y) f[a * 11 + y] = m[a * 11 + y] = a < 70 ? 0.02 : 0.2;
  const LifeTable t(0, 110, 2000, 2010, f, m);
  const std::vector<PatientRecord> records{
      testing::make_record(365.25, 0, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1), 50, 2000),
      testing::make_record(3 * 365.25, 0, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1), 80, 2000)};
  const std::vector<double> grid{365.25, 2 * 365.25};
  const RsCurve c = ederer2(records, t, grid);
  const double l1 = (0.02 + 0.2) / 2;
  CHECK(c.expected[0] == doctest::Approx(std::exp(-l1)).epsilon(1e-12));
  CHECK(c.expected[1] == doctest::Approx(std::exp(-l1 - 0.2)).epsilon(1e-12));
}

TEST_CASE("estimate does not depend on grid refinement") {
  std::mt19937_64 rng(7);
  const auto records = testing::random_cohort(rng, 40);
  const LifeTable t = LifeTable::constant(0.03);
  const std::vector<double> coarse{400, 800, 1600};
  std::vector<double> fine;
  for (double g = 20; g <= 1600; g += 20) fine.push_back(g);
  const RsCurve a = ederer2(records, t, coarse);
  const RsCurve b = ederer2(records, t, fine);
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    const auto j = static_cast<std::size_t>(std::find(fine.begin(), fine.end(), coarse[i]) - fine.begin());
    CHECK(a.estimate[i] == doctest::Approx(b.estimate[j]).epsilon(1e-12));
  }
}

TEST_CASE("intervals bracket the estimate and at-risk counts decrease") {
  std::mt19937_64 rng(8);
  const auto records = testing::random_cohort(rng, 60);
  const RsCurve c = ederer2(records, LifeTable::constant(0.02), monthly_grid(2500.0));
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    CHECK(c.lower[i] <= c.estimate[i]);
    CHECK(c.upper[i] >= c.estimate[i]);
    CHECK(c.estimate[i] >= 0.0);
    if (i) CHECK(c.at_risk[i] <= c.at_risk[i - 1]);
  }
}

TEST_CASE("grid beyond follow-up is truncated") {
  const std::vector<PatientRecord> records{testing::make_record(100.0, 1), testing::make_record(200.0, 0)};
  const std::vector<double> grid{50, 150, 250};
  const RsCurve c = ederer2(records, LifeTable::constant(0.0), grid);
  CHECK(c.truncated);
  CHECK(c.grid.size() == 2);
}

TEST_CASE("grid validation") {
  const std::vector<PatientRecord> records{testing::make_record(100.0, 1)};
  const std::vector<double> bad{0.0, 10.0};
  CHECK_THROWS_AS(ederer2(records, LifeTable::constant(0.0), bad), InputError);
  const std::vector<double> unsorted{10.0, 5.0};
  CHECK_THROWS_AS(ederer2(records, LifeTable::constant(0.0), unsorted), InputError);
}
