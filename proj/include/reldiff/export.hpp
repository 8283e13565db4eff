#pragma once
#include <iosfwd>
#include <json.hpp>
#include <string>

#include "reldiff/harness.hpp"
#include "reldiff/kruskal.hpp"

namespace reldiff {

constexpr const char* kPathSchema = "reldiff-path/1";
constexpr const char* kSummarySchema = "reldiff-summary/1";
constexpr const char* kMinkowskiPathSchema = "reldiff-minkowski-path/1";

// CSV with a schema comment line and a header; NaN fields are left empty.
void write_path_csv(std::ostream& out, const ExtendedPath& path);
ExtendedPath read_path_csv(std::istream& in);
// Minkowski paths: s, xi0..xid, p0..pd.
void write_minkowski_csv(std::ostream& out, const std::vector<MinkowskiState>& path);

nlohmann::json events_json(const EventLog& log);
nlohmann::json summary_json(const EnsembleSummary& s, const EnsembleConfig& c);
nlohmann::json fate_json(const Fate& f);

// Checks the subset of JSON Schema used by the shipped schemas
// (type, required, properties, items, enum, minimum). Returns an empty string when valid.
std::string schema_errors(const nlohmann::json& doc, const nlohmann::json& schema);

// Number formatting shared by CSV and JSON text: shortest round-trip form.
std::string format_number(double x);

}  // namespace reldiff
