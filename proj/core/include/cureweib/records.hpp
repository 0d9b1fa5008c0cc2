#pragma once

#include "cureweib/survival.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace cureweib {

struct PatientRow {
  std::string id;
  double time_days = 0.0;
  int status = 0;
  double age = 0.0;
  Sex sex = Sex::female;
  double year_dx = 0.0;
  std::vector<double> extras;
};

struct PatientTable {
  std::vector<std::string> extra_names;
  std::vector<PatientRow> rows;
};

// Reads `id,time_days,status,age,sex,year_dx[,extra...]`. Sex accepts F/M,
// female/male or 0/1 (1 = male). Zero follow-up times are imputed to half a
// day with a warning. Errors name the 1-based data row.
PatientTable read_patients(std::istream& in);
PatientTable read_patients(const std::filesystem::path& path);
void write_patients(std::ostream& out, const PatientTable& table);

// Column names for the survival (x) and cure (y) designs; both get a leading
// intercept. Available names: age, year_dx, sex and any extra column.
struct CovariateMapping {
  std::vector<std::string> survival{"age", "year_dx"};
  std::vector<std::string> cure{"age", "year_dx"};
};

std::vector<PatientRecord> to_records(const PatientTable& table, const CovariateMapping& mapping);
std::vector<PatientRecord> ingest_patients(const std::filesystem::path& path, const CovariateMapping& mapping = {});

}  // namespace cureweib
