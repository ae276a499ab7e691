#pragma once

// Long-format panel CSV ingestion and export. Schema: header row with
// columns g, t, then optionally y and regressor columns x1..xk. Comma
// separated, '.' decimal, UTF-8, no quoting. Malformed rows are hard
// errors carrying the 1-based line number.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetvar/panel.hpp"
#include "hetvar/regression.hpp"

namespace hetvar {

class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct PanelData {
  std::vector<PanelRecord> records;
  bool has_y = false;
  std::vector<double> y;
  std::vector<std::string> x_names;          // as in the header
  std::vector<std::vector<double>> x_rows;   // one row per observation

  std::size_t n() const { return records.size(); }
};

PanelData parse_panel_csv(std::istream& in);
PanelData load_panel_csv(const std::string& path);

void dump_panel_csv(const PanelData& d, std::ostream& out);

/// Assemble a regression design. Requires y and at least one regressor
/// column (or an intercept).
Design to_design(const PanelData& d, bool intercept);

}  // namespace hetvar
