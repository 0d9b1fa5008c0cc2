#pragma once

#include "cureweib/em.hpp"
#include "cureweib/records.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cureweib {

inline constexpr int kArtifactSchemaVersion = 1;

struct ModelArtifact {
  FittedCureModel model;
  CovariateMapping covariates;
  std::string timestamp;  // ISO-8601 UTC; ignored by comparisons
};

std::string utc_timestamp();

nlohmann::ordered_json to_json(const ModelArtifact& artifact, bool include_timestamp = true);
// Throws InputError on a schema-version mismatch or malformed document.
ModelArtifact artifact_from_json(const nlohmann::ordered_json& doc);

void save_artifact(std::ostream& out, const ModelArtifact& artifact);
void save_artifact(const std::filesystem::path& path, const ModelArtifact& artifact);
ModelArtifact load_artifact(std::istream& in);
ModelArtifact load_artifact(const std::filesystem::path& path);

// Serialized form with the timestamp removed; equal strings mean equal models.
std::string artifact_fingerprint(const ModelArtifact& artifact);

struct PlotRow {
  std::string group;
  std::string source;  // "ederer2" or "model:<kind>"
  double time_years = 0.0;
  double value = 0.0;
  std::optional<double> lo;
  std::optional<double> hi;
  friend bool operator==(const PlotRow&, const PlotRow&) = default;
};

void write_plot_data(std::ostream& out, const std::vector<PlotRow>& rows);
std::vector<PlotRow> read_plot_data(std::istream& in);

}  // namespace cureweib
