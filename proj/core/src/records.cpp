#include "cureweib/records.hpp"

#include "cureweib/error.hpp"
#include "cureweib/log.hpp"
#include "text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

namespace cureweib {

namespace {

const std::vector<std::string> kFixedColumns{"id", "time_days", "status", "age", "sex", "year_dx"};

[[noreturn]] void row_error(std::size_t row, const std::string& msg) {
  throw InputError("patients row " + std::to_string(row) + ": " + msg);
}

double number(const std::string& field, const std::string& column, std::size_t row) {
  const auto v = text::parse_number<double>(field);
  if (!v || !std::isfinite(*v)) row_error(row, column + " is not a finite number ('" + field + "')");
  return *v;
}

Sex parse_sex(const std::string& field, std::size_t row) {
  std::string s = field;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "f" || s == "female" || s == "0") return Sex::female;
  if (s == "m" || s == "male" || s == "1") return Sex::male;
  row_error(row, "sex must be F/M or 0/1 ('" + field + "')");
}

}  // namespace

PatientTable read_patients(std::istream& in) {
  PatientTable table;
  std::string line;
  bool header_seen = false;
  std::size_t width = 0;
  std::size_t row = 0;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    const std::string t = text::trim(line);
    if (t.empty()) continue;
    auto fields = text::split_row(t);
    if (!header_seen) {
      for (std::size_t c = 0; c < kFixedColumns.size(); ++c) {
        if (c >= fields.size()) throw InputError("patients header is missing column '" + kFixedColumns[c] + "'");
        if (fields[c] != kFixedColumns[c])
          throw InputError("patients header column " + std::to_string(c + 1) + " must be '" + kFixedColumns[c] +
                           "', found '" + fields[c] + "'");
      }
      table.extra_names.assign(fields.begin() + static_cast<long>(kFixedColumns.size()), fields.end());
      std::set<std::string> names(fields.begin(), fields.end());
      if (names.size() != fields.size()) throw InputError("patients header has duplicate column names");
      width = fields.size();
      header_seen = true;
      continue;
    }
    ++row;
    if (fields.size() != width)
      row_error(row, "expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()));
    PatientRow r;
    r.id = fields[0];
    if (r.id.empty()) row_error(row, "empty id");
    if (!ids.insert(r.id).second) row_error(row, "duplicate id '" + r.id + "'");
    r.time_days = number(fields[1], "time_days", row);
    if (r.time_days < 0.0) row_error(row, "time_days must be >= 0");
    const auto status = text::parse_number<int>(fields[2]);
    if (!status || (*status != 0 && *status != 1)) row_error(row, "status must be 0 or 1 ('" + fields[2] + "')");
    r.status = *status;
    if (r.time_days == 0.0) {
      r.time_days = kMinTimeDays;
      log_warn("patients row " + std::to_string(row) + ": zero follow-up time imputed to 0.5 day");
    }
    r.age = number(fields[3], "age", row);
    if (r.age < 0.0) row_error(row, "age must be >= 0");
    r.sex = parse_sex(fields[4], row);
    r.year_dx = number(fields[5], "year_dx", row);
    for (std::size_t c = kFixedColumns.size(); c < width; ++c)
      r.extras.push_back(number(fields[c], table.extra_names[c - kFixedColumns.size()], row));
    table.rows.push_back(std::move(r));
  }
  if (!header_seen) throw InputError("patients file is empty");
  if (table.rows.empty()) throw InputError("patients file has no data rows");
  return table;
}

PatientTable read_patients(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open patients file '" + path.string() + "'");
  return read_patients(in);
}

void write_patients(std::ostream& out, const PatientTable& table) {
  for (std::size_t c = 0; c < kFixedColumns.size(); ++c) out << (c ? "," : "") << kFixedColumns[c];
  for (const auto& n : table.extra_names) out << ',' << n;
  out << '\n';
  for (const auto& r : table.rows) {
    out << r.id << ',' << text::format_double(r.time_days) << ',' << r.status << ',' << text::format_double(r.age)
        << ',' << (r.sex == Sex::male ? 'M' : 'F') << ',' << text::format_double(r.year_dx);
    for (double v : r.extras) out << ',' << text::format_double(v);
    out << '\n';
  }
}

std::vector<PatientRecord> to_records(const PatientTable& table, const CovariateMapping& mapping) {
  auto resolve = [&](const std::vector<std::string>& names) {
    std::vector<int> idx;
    std::vector<std::string> missing;
    for (const auto& n : names) {
      if (n == "age") idx.push_back(-1);
      else if (n == "year_dx") idx.push_back(-2);
      else if (n == "sex") idx.push_back(-3);
      else {
        const auto it = std::find(table.extra_names.begin(), table.extra_names.end(), n);
        if (it == table.extra_names.end()) missing.push_back(n);
        else idx.push_back(static_cast<int>(it - table.extra_names.begin()));
      }
    }
    if (!missing.empty()) {
      std::string msg = "unknown covariate columns:";
      for (const auto& m : missing) msg += " " + m;
      throw InputError(msg);
    }
    return idx;
  };
  const auto xs = resolve(mapping.survival);
  const auto ys = resolve(mapping.cure);
  auto build = [](const PatientRow& r, const std::vector<int>& idx) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(idx.size()) + 1);
    v[0] = 1.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const int j = idx[k];
      v[static_cast<Eigen::Index>(k) + 1] = j == -1   ? r.age
                                            : j == -2 ? r.year_dx
                                            : j == -3 ? (r.sex == Sex::male ? 1.0 : 0.0)
                                                      : r.extras[static_cast<std::size_t>(j)];
    }
    return v;
  };
  std::vector<PatientRecord> out;
  out.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    PatientRecord rec;
    rec.id = r.id;
    rec.time = r.time_days;
    rec.status = r.status;
    rec.age_at_dx = r.age;
    rec.sex = r.sex;
    rec.year_dx = r.year_dx;
    rec.survival_covariates = build(r, xs);
    rec.cure_covariates = build(r, ys);
    validate(rec);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<PatientRecord> ingest_patients(const std::filesystem::path& path, const CovariateMapping& mapping) {
  return to_records(read_patients(path), mapping);
}

}  // namespace cureweib
