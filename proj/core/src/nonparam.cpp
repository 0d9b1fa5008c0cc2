#include "cureweib/nonparam.hpp"

#include "cureweib/error.hpp"
#include "cureweib/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cureweib {

namespace {

void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw InputError("empty evaluation grid");
  if (!(grid[0] > 0.0)) throw InputError("grid must start after time 0");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw InputError("grid must be strictly increasing");
}

struct EventTable {
  std::vector<double> times;  // distinct follow-up times, ascending
  std::vector<int> deaths;
  std::vector<int> at_risk;   // #{t_i >= times[j]}
};

EventTable tabulate(std::span<const PatientRecord> records) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return records[a].time < records[b].time; });
  EventTable t;
  int remaining = static_cast<int>(records.size());
  for (std::size_t k = 0; k < order.size();) {
    const double time = records[order[k]].time;
    int deaths = 0, leaving = 0;
    while (k < order.size() && records[order[k]].time == time) {
      deaths += records[order[k]].status;
      ++leaving;
      ++k;
    }
    t.times.push_back(time);
    t.deaths.push_back(deaths);
    t.at_risk.push_back(remaining);
    remaining -= leaving;
  }
  return t;
}

int at_risk_at(std::span<const PatientRecord> records, double g) {
  return static_cast<int>(std::count_if(records.begin(), records.end(), [&](const auto& r) { return r.time >= g; }));
}

}  // namespace

std::vector<double> monthly_grid(double max_days) {
  const double month = kDaysPerYear / 12.0;
  std::vector<double> grid;
  for (int m = 1; m * month <= max_days * (1.0 + 1e-12); ++m) grid.push_back(m * month);
  return grid;
}

KaplanMeierCurve kaplan_meier(std::span<const PatientRecord> records, std::span<const double> grid) {
  check_grid(grid);
  const EventTable events = tabulate(records);
  KaplanMeierCurve km;
  double s = 1.0, g = 0.0;
  std::size_t j = 0;
  for (double t : grid) {
    for (; j < events.times.size() && events.times[j] <= t; ++j) {
      const int d = events.deaths[j];
      const int y = events.at_risk[j];
      if (d == 0) continue;
      s *= 1.0 - static_cast<double>(d) / y;
      g = (y == d) ? std::numeric_limits<double>::infinity()
                   : g + static_cast<double>(d) / (static_cast<double>(y) * (y - d));
    }
    km.grid.push_back(t);
    km.survival.push_back(s);
    km.greenwood.push_back(g);
    km.at_risk.push_back(at_risk_at(records, t));
  }
  return km;
}

RsCurve ederer2(std::span<const PatientRecord> records, const BackgroundModel& background,
                std::span<const double> grid, double level) {
  check_grid(grid);
  if (records.empty()) throw InputError("ederer2 needs at least one record");
  if (!(level > 0.0 && level < 1.0)) throw InputError("confidence level must lie in (0, 1)");
  const double z = normal_quantile(0.5 + level / 2.0);

  const double last = std::max_element(records.begin(), records.end(),
                                       [](const auto& a, const auto& b) { return a.time < b.time; })->time;
  std::vector<double> kept;
  for (double g : grid)
    if (g <= last) kept.push_back(g);
  RsCurve curve;
  curve.truncated = kept.size() < grid.size();
  if (kept.empty()) return curve;

  const KaplanMeierCurve km = kaplan_meier(records, kept);

  // Breakpoints: every follow-up time and grid point; the risk set is constant
  // on each interval between consecutive breakpoints.
  std::vector<double> breaks(kept.begin(), kept.end());
  for (const auto& r : records)
    if (r.time <= kept.back()) breaks.push_back(r.time);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  // increments[k] = sum over patients at risk on (breaks[k-1], breaks[k]] of
  // H0_i(breaks[k]) - H0_i(breaks[k-1]).
  std::vector<CompensatedSum> increments(breaks.size());
  std::vector<int> risk(breaks.size(), 0);
  for (const auto& r : records) {
    double prev_h = 0.0;
    for (std::size_t k = 0; k < breaks.size() && breaks[k] <= r.time; ++k) {
      const double h = background.cumulative_hazard(r, breaks[k]);
      increments[k].add(h - prev_h);
      ++risk[k];
      prev_h = h;
    }
  }

  double lambda_e = 0.0;
  std::size_t k = 0;
  for (std::size_t gi = 0; gi < kept.size(); ++gi) {
    for (; k < breaks.size() && breaks[k] <= kept[gi]; ++k)
      if (risk[k] > 0) lambda_e += increments[k].value() / risk[k];
    const double expected = std::exp(-lambda_e);
    const double rs = km.survival[gi] / expected;
    const double se = std::sqrt(km.greenwood[gi]);
    curve.grid.push_back(kept[gi]);
    curve.observed.push_back(km.survival[gi]);
    curve.expected.push_back(expected);
    curve.estimate.push_back(rs);
    if (rs > 0.0 && std::isfinite(se)) {
      curve.lower.push_back(rs * std::exp(-z * se));
      curve.upper.push_back(rs * std::exp(z * se));
    } else {
      curve.lower.push_back(0.0);
      curve.upper.push_back(rs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    }
    curve.at_risk.push_back(km.at_risk[gi]);
  }
  return curve;
}

RsCurve ederer2(std::span<const PatientRecord> records, const LifeTable& table, std::span<const double> grid,
                double level) {
  return ederer2(records, LifeTableBackground(table), grid, level);
}

}  // namespace cureweib
