#pragma once

#include "cureweib/survival.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cureweib {

// Annual population mortality hazards on a rectangular (age, year, sex) grid.
// Immutable after construction.
class LifeTable {
 public:
  LifeTable(int age_min, int age_max, int year_min, int year_max, std::vector<double> female,
            std::vector<double> male);

  // Constant-hazard table; handy for synthetic cohorts and tests.
  static LifeTable constant(double rate, int age_min = 0, int age_max = 110, int year_min = 1900,
                            int year_max = 2100);

  // Annual hazard of the cell, with ages/years clamped to the table range.
  double rate(int age, int year, Sex sex) const;

  int age_min() const { return age_min_; }
  int age_max() const { return age_max_; }
  int year_min() const { return year_min_; }
  int year_max() const { return year_max_; }
  std::size_t size() const { return female_.size() + male_.size(); }

  friend bool operator==(const LifeTable&, const LifeTable&) = default;

 private:
  std::size_t index(int age, int year) const;

  int age_min_;
  int age_max_;
  int year_min_;
  int year_max_;
  std::vector<double> female_;
  std::vector<double> male_;
};

// Reads `age,year,sex,rate` rows. A leading `#kind=survival` directive makes
// `rate` an annual survival probability, converted with mu = -log(p).
LifeTable load_life_table(std::istream& in);
LifeTable load_life_table(const std::filesystem::path& path);
void write_life_table(std::ostream& out, const LifeTable& table);

// Source of each patient's expected survival S_0 and population hazard h_0.
class BackgroundModel {
 public:
  virtual ~BackgroundModel() = default;
  virtual BackgroundAtTime at(const PatientRecord& patient, double t_days) const = 0;
  // -log S_0(t)
  virtual double cumulative_hazard(const PatientRecord& patient, double t_days) const = 0;
};

// Cohort evaluation: attained age and calendar year both advance with follow-up
// time; hazards are piecewise constant over (age, year) cells.
class LifeTableBackground final : public BackgroundModel {
 public:
  explicit LifeTableBackground(const LifeTable& table) : table_(&table) {}

  BackgroundAtTime at(const PatientRecord& patient, double t_days) const override;
  double cumulative_hazard(const PatientRecord& patient, double t_days) const override;

 private:
  const LifeTable* table_;
};

BackgroundAtTime background_at(const LifeTable& table, const PatientRecord& patient, double t_days);

struct BackgroundCurve {
  std::string patient_id;
  std::vector<double> grid;  // days
  std::vector<double> s0;
  std::vector<double> h0;    // per day
};

BackgroundCurve background_curve(const LifeTable& table, const PatientRecord& patient,
                                 std::span<const double> grid);

// S_0 and h_0 of every record at its own follow-up time.
std::vector<BackgroundAtTime> backgrounds_at_exit(const BackgroundModel& model,
                                                  std::span<const PatientRecord> records);

}  // namespace cureweib
