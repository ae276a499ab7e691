#pragma once

// Report rendering: aligned text tables for humans, JSON documents with full
// provenance (config echo, version, seeds) for machines, CSV export of
// rejection tables, and atomic file writes.

#include <string>
#include <vector>

#include "hetvar/regression.hpp"
#include "hetvar/simulation.hpp"

namespace hetvar {

inline constexpr const char* kVersion = "0.1.0";
/// Environment variable that overrides every master seed when set.
inline constexpr const char* kSeedEnvVar = "HETVAR_SEED";

/// Write content to path via a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& content);

/// Rejection-rate table in the simulation campaign layout:
/// one row per config, one column per method.
std::string simulation_text_table(const std::vector<RejectionReport>& reports);
std::string simulation_json_report(const std::vector<RejectionReport>& reports);
std::string simulation_csv_table(const std::vector<RejectionReport>& reports);

struct EstimateRow {
  std::string coefficient;
  double estimate = 0.0;
  // per method: SE or NaN when the method failed
  std::vector<double> se;
};

struct EstimateReport {
  std::vector<std::string> method_columns;  // display names, e.g. "CHS", "CHS-na"
  std::vector<EstimateRow> rows;
  std::vector<std::string> failures;        // human-readable per-method failures
  std::size_t bandwidth_used = 0;
  bool bandwidth_was_auto = true;
  std::string csv_path;
  bool within_applied = false;
  bool intercept = false;
};

std::string estimate_text_table(const EstimateReport& r);
std::string estimate_json_report(const EstimateReport& r);

}  // namespace hetvar
