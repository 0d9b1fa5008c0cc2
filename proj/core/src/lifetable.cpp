#include "cureweib/lifetable.hpp"

#include "cureweib/error.hpp"
#include "cureweib/log.hpp"
#include "cureweib/numeric.hpp"
#include "text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <tuple>

namespace cureweib {

LifeTable::LifeTable(int age_min, int age_max, int year_min, int year_max,
                     std::vector<double> female, std::vector<double> male)
    : age_min_(age_min),
      age_max_(age_max),
      year_min_(year_min),
      year_max_(year_max),
      female_(std::move(female)),
      male_(std::move(male)) {
  if (age_max < age_min || year_max < year_min) throw InputError("life table: empty range");
  const auto cells = static_cast<std::size_t>(age_max - age_min + 1) *
                     static_cast<std::size_t>(year_max - year_min + 1);
  if (female_.size() != cells || male_.size() != cells)
    throw InputError("life table: expected " + std::to_string(cells) + " cells per sex");
  for (const auto* v : {&female_, &male_})
    for (double mu : *v)
      if (!(mu >= 0.0) || !std::isfinite(mu)) throw InputError("life table: rates must be finite and >= 0");
}

LifeTable LifeTable::constant(double rate, int age_min, int age_max, int year_min, int year_max) {
  const auto cells = static_cast<std::size_t>(age_max - age_min + 1) *
                     static_cast<std::size_t>(year_max - year_min + 1);
  return LifeTable(age_min, age_max, year_min, year_max, std::vector<double>(cells, rate),
                   std::vector<double>(cells, rate));
}

std::size_t LifeTable::index(int age, int year) const {
  const int a = std::clamp(age, age_min_, age_max_);
  const int y = std::clamp(year, year_min_, year_max_);
  return static_cast<std::size_t>(a - age_min_) * static_cast<std::size_t>(year_max_ - year_min_ + 1) +
         static_cast<std::size_t>(y - year_min_);
}

double LifeTable::rate(int age, int year, Sex sex) const {
  const auto i = index(age, year);
  return sex == Sex::female ? female_[i] : male_[i];
}

using text::parse_number;
using text::split_row;
using text::trim;

LifeTable load_life_table(std::istream& in) {
  bool survival_kind = false;
  std::string line;
  std::size_t row = 0;
  bool header_seen = false;
  using Key = std::tuple<int, int, Sex>;
  std::map<Key, double> cells;

  while (std::getline(in, line)) {
    ++row;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      if (t == "#kind=survival") survival_kind = true;
      else if (t != "#kind=hazard")
        throw InputError("life table row " + std::to_string(row) + ": unknown directive '" + t + "'");
      continue;
    }
    const auto fields = split_row(t);
    if (!header_seen) {
      if (fields != std::vector<std::string>{"age", "year", "sex", "rate"})
        throw InputError("life table row " + std::to_string(row) + ": expected header age,year,sex,rate");
      header_seen = true;
      continue;
    }
    const std::string where = "life table row " + std::to_string(row) + ": ";
    if (fields.size() != 4) throw InputError(where + "expected 4 fields");
    const auto age = parse_number<int>(fields[0]);
    const auto year = parse_number<int>(fields[1]);
    const auto value = parse_number<double>(fields[3]);
    if (!age || !year || !value) throw InputError(where + "non-numeric field");
    Sex sex;
    if (fields[2] == "F") sex = Sex::female;
    else if (fields[2] == "M") sex = Sex::male;
    else throw InputError(where + "sex must be F or M");

    double mu = *value;
    if (survival_kind) {
      if (!(mu > 0.0 && mu <= 1.0)) throw InputError(where + "survival probability must be in (0,1]");
      mu = -std::log(mu);
    }
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw InputError(where + "negative or non-finite rate");
    const Key key{*age, *year, sex};
    if (!cells.emplace(key, mu).second)
      throw InputError(where + "duplicate key (age=" + fields[0] + ", year=" + fields[1] +
                       ", sex=" + fields[2] + ")");
  }
  if (!header_seen || cells.empty()) throw InputError("life table: no rows");

  int a0 = std::get<0>(cells.begin()->first), a1 = a0;
  int y0 = std::get<1>(cells.begin()->first), y1 = y0;
  for (const auto& [key, mu] : cells) {
    a0 = std::min(a0, std::get<0>(key));
    a1 = std::max(a1, std::get<0>(key));
    y0 = std::min(y0, std::get<1>(key));
    y1 = std::max(y1, std::get<1>(key));
  }
  const auto cells_per_sex = static_cast<std::size_t>(a1 - a0 + 1) * static_cast<std::size_t>(y1 - y0 + 1);
  std::vector<double> female(cells_per_sex), male(cells_per_sex);
  for (int a = a0; a <= a1; ++a)
    for (int y = y0; y <= y1; ++y)
      for (Sex s : {Sex::female, Sex::male}) {
        const auto it = cells.find({a, y, s});
        if (it == cells.end())
          throw InputError("life table: missing cell (age=" + std::to_string(a) + ", year=" +
                           std::to_string(y) + ", sex=" + (s == Sex::female ? "F" : "M") + ")");
        const auto i = static_cast<std::size_t>(a - a0) * static_cast<std::size_t>(y1 - y0 + 1) +
                       static_cast<std::size_t>(y - y0);
        (s == Sex::female ? female : male)[i] = it->second;
      }
  return LifeTable(a0, a1, y0, y1, std::move(female), std::move(male));
}

LifeTable load_life_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open life table '" + path.string() + "'");
  return load_life_table(in);
}

void write_life_table(std::ostream& out, const LifeTable& table) {
  out << "age,year,sex,rate\n";
  for (int a = table.age_min(); a <= table.age_max(); ++a)
    for (int y = table.year_min(); y <= table.year_max(); ++y)
      for (Sex s : {Sex::female, Sex::male})
        out << a << ',' << y << ',' << (s == Sex::female ? 'F' : 'M') << ','
            << text::format_double(table.rate(a, y, s)) << '\n';
}

namespace {

// Walks a patient's (age, year) trajectory through the table, integrating
// the piecewise-constant annual hazard. Positions are in years since diagnosis.
class CohortWalker {
 public:
  CohortWalker(const LifeTable& table, const PatientRecord& p)
      : table_(table), patient_(p) {
    if (!std::isfinite(p.age_at_dx) || !std::isfinite(p.year_dx))
      throw RangeError("patient '" + p.id + "': non-finite age or year of diagnosis");
    age_cell_ = static_cast<int>(std::floor(p.age_at_dx));
    year_cell_ = static_cast<int>(std::floor(p.year_dx));
    check_range();
  }

  // Advances to `u` years after diagnosis (u >= current position).
  void advance_to(double u) {
    for (;;) {
      const double next_age = (age_cell_ + 1) - patient_.age_at_dx;
      const double next_year = (year_cell_ + 1) - patient_.year_dx;
      const double boundary = std::min(next_age, next_year);
      if (boundary > u) break;
      cumulative_ += current_rate() * (boundary - position_);
      position_ = boundary;
      if (next_age <= boundary) ++age_cell_;
      if (next_year <= boundary) ++year_cell_;
      check_range();
    }
    cumulative_ += current_rate() * (u - position_);
    position_ = u;
  }

  double cumulative() const { return cumulative_; }  // years * annual rate
  double current_rate() const { return table_.rate(age_cell_, year_cell_, patient_.sex); }

 private:
  void check_range() {
    if (age_cell_ < table_.age_min() || age_cell_ > table_.age_max() ||
        year_cell_ < table_.year_min() || year_cell_ > table_.year_max()) {
      log_warn_once("lifetable-clamp",
                    "life table range exceeded (e.g. patient '" + patient_.id +
                        "'); using nearest boundary cells");
    }
  }

  const LifeTable& table_;
  const PatientRecord& patient_;
  int age_cell_;
  int year_cell_;
  double position_ = 0.0;
  double cumulative_ = 0.0;
};

double to_years(double t_days, const PatientRecord& p) {
  if (!(t_days >= 0.0) || !std::isfinite(t_days))
    throw RangeError("patient '" + p.id + "': time must be finite and >= 0");
  return t_days / kDaysPerYear;
}

}  // namespace

BackgroundAtTime background_at(const LifeTable& table, const PatientRecord& patient, double t_days) {
  CohortWalker walker(table, patient);
  walker.advance_to(to_years(t_days, patient));
  return {std::exp(-walker.cumulative()), walker.current_rate() / kDaysPerYear};
}

BackgroundAtTime LifeTableBackground::at(const PatientRecord& patient, double t_days) const {
  return background_at(*table_, patient, t_days);
}

double LifeTableBackground::cumulative_hazard(const PatientRecord& patient, double t_days) const {
  CohortWalker walker(*table_, patient);
  walker.advance_to(to_years(t_days, patient));
  return walker.cumulative();
}

BackgroundCurve background_curve(const LifeTable& table, const PatientRecord& patient,
                                 std::span<const double> grid) {
  BackgroundCurve curve;
  curve.patient_id = patient.id;
  curve.grid.assign(grid.begin(), grid.end());
  curve.s0.reserve(grid.size());
  curve.h0.reserve(grid.size());
  CohortWalker walker(table, patient);
  double previous = 0.0;
  for (double t : grid) {
    const double u = to_years(t, patient);
    if (u < previous) throw InputError("background_curve: grid must be sorted");
    walker.advance_to(u);
    previous = u;
    curve.s0.push_back(std::exp(-walker.cumulative()));
    curve.h0.push_back(walker.current_rate() / kDaysPerYear);
  }
  return curve;
}

std::vector<BackgroundAtTime> backgrounds_at_exit(const BackgroundModel& model,
                                                  std::span<const PatientRecord> records) {
  std::vector<BackgroundAtTime> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(model.at(r, r.time));
  return out;
}

}  // namespace cureweib
