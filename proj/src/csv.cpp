#include "hetvar/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hetvar {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  std::size_t b = s.find_last_not_of(" \t");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

std::int64_t parse_id(const std::string& s, const char* what, std::size_t line) {
  const std::string t = trim(s);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size())
    throw CsvError(std::string("cannot parse ") + what + " value '" + s + "'", line);
  return v;
}

double parse_real(const std::string& s, const std::string& what, std::size_t line) {
  const std::string t = trim(s);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v))
    throw CsvError("cannot parse " + what + " value '" + s + "'", line);
  return v;
}

}  // namespace

PanelData parse_panel_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw CsvError("missing header row", 1);
  ++lineno;
  const auto header = split_csv_line(line);

  int g_col = -1, t_col = -1, y_col = -1;
  std::vector<std::pair<int, std::string>> x_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = trim(header[c]);
    if (name == "g") g_col = static_cast<int>(c);
    else if (name == "t") t_col = static_cast<int>(c);
    else if (name == "y") y_col = static_cast<int>(c);
    else if (!name.empty()) x_cols.emplace_back(static_cast<int>(c), name);
    else throw CsvError("empty column name in header", 1);
  }
  if (g_col < 0 || t_col < 0) throw CsvError("header must contain 'g' and 't' columns", 1);

  PanelData d;
  d.has_y = y_col >= 0;
  for (const auto& [c, name] : x_cols) d.x_names.push_back(name);

  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw CsvError("expected " + std::to_string(header.size()) + " fields, found " +
                         std::to_string(fields.size()),
                     lineno);
    PanelRecord rec;
    rec.g = parse_id(fields[g_col], "g", lineno);
    rec.t = parse_id(fields[t_col], "t", lineno);
    if (rec.g <= 0 || rec.t <= 0) throw CsvError("ids must be positive integers", lineno);
    d.records.push_back(rec);
    if (d.has_y) d.y.push_back(parse_real(fields[y_col], "y", lineno));
    std::vector<double> xr;
    xr.reserve(x_cols.size());
    for (const auto& [c, name] : x_cols) xr.push_back(parse_real(fields[c], name, lineno));
    d.x_rows.push_back(std::move(xr));
  }
  if (d.records.empty()) throw CsvError("no data rows", lineno + 1);
  return d;
}

PanelData load_panel_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path);
  return parse_panel_csv(in);
}

void dump_panel_csv(const PanelData& d, std::ostream& out) {
  out << "g,t";
  if (d.has_y) out << ",y";
  for (const auto& n : d.x_names) out << "," << n;
  out << "\n";
  char buf[64];
  for (std::size_t i = 0; i < d.n(); ++i) {
    out << d.records[i].g << "," << d.records[i].t;
    if (d.has_y) {
      std::snprintf(buf, sizeof buf, "%.17g", d.y[i]);
      out << "," << buf;
    }
    for (double v : d.x_rows[i]) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << "," << buf;
    }
    out << "\n";
  }
}

Design to_design(const PanelData& d, bool intercept) {
  if (!d.has_y) throw std::invalid_argument("to_design: CSV has no y column");
  const std::size_t k = d.x_names.size();
  if (k == 0 && !intercept)
    throw std::invalid_argument("to_design: no regressors and no intercept");
  Design out;
  out.panel = PanelIndex::build(d.records);
  out.y = d.y;
  const std::size_t v = k + (intercept ? 1 : 0);
  out.X = ScoreMatrix(d.n(), v);
  if (intercept) out.names.push_back("const");
  for (const auto& n : d.x_names) out.names.push_back(n);
  for (std::size_t i = 0; i < d.n(); ++i) {
    std::size_t c = 0;
    if (intercept) out.X(i, c++) = 1.0;
    for (std::size_t j = 0; j < k; ++j) out.X(i, c++) = d.x_rows[i][j];
  }
  return out;
}

}  // namespace hetvar
