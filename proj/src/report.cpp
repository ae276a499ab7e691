#include "hetvar/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace hetvar {

using nlohmann::json;

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

namespace {

std::string fmt(double v, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

json config_to_json(const SimulationConfig& c) {
  json j;
  j["label"] = c.label;
  j["clusters"] = c.clusters;
  j["periods"] = c.periods;
  j["rho"] = c.rho;
  j["beta0"] = c.beta0;
  j["beta1"] = c.beta1;
  j["weights"] = {{"alpha", c.w_alpha}, {"gamma", c.w_gamma}, {"eps", c.w_eps}};
  j["het"] = {{"pattern", het_pattern_name(c.het_pattern)}, {"amplitude", c.het_amplitude}};
  j["replications"] = c.replications;
  j["master_seed"] = c.master_seed;
  j["kernel"] = c.kernel_kind == KernelKind::Triangular ? "triangular" : "uniform";
  if (c.bandwidth_auto) j["bandwidth"] = "auto";
  else j["bandwidth"] = c.bandwidth;
  j["alpha_level"] = c.alpha_level;
  j["chs_drop_adjustment"] = c.chs_drop_adjustment;
  std::vector<std::string> ms;
  for (Method m : c.methods) ms.push_back(method_name(m));
  j["methods"] = ms;
  return j;
}

}  // namespace

std::string simulation_text_table(const std::vector<RejectionReport>& reports) {
  std::ostringstream out;
  if (reports.empty()) return "";
  // method columns from the first report
  std::vector<std::string> cols;
  for (const auto& m : reports.front().methods) cols.push_back(method_name(m.method));

  out << std::left << std::setw(8) << "row" << std::right << std::setw(6) << "N"
      << std::setw(6) << "T" << std::setw(7) << "rho";
  for (const auto& c : cols) out << std::setw(8) << c;
  out << "\n";
  for (const auto& r : reports) {
    out << std::left << std::setw(8) << (r.config.label.empty() ? "-" : r.config.label)
        << std::right << std::setw(6) << r.config.clusters << std::setw(6)
        << r.config.periods << std::setw(7) << fmt(r.config.rho, 2);
    for (const auto& m : r.methods) out << std::setw(8) << fmt(m.rate, 3);
    out << "\n";
  }
  return out.str();
}

std::string simulation_csv_table(const std::vector<RejectionReport>& reports) {
  std::ostringstream out;
  out << "row,N,T,rho,method,rate,mc_se,rejections,failures,mean_variance,"
         "oracle_score_variance,mean_bandwidth\n";
  char buf[64];
  auto g = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& r : reports) {
    for (const auto& m : r.methods) {
      out << (r.config.label.empty() ? "-" : r.config.label) << "," << r.config.clusters
          << "," << r.config.periods << "," << g(r.config.rho) << ","
          << method_name(m.method) << "," << g(m.rate) << "," << g(m.mc_se) << ","
          << m.rejections << "," << m.failures << "," << g(m.mean_variance) << ","
          << (r.oracle_score_variance ? g(*r.oracle_score_variance) : "") << ","
          << g(m.mean_bandwidth) << "\n";
    }
  }
  return out.str();
}

std::string simulation_json_report(const std::vector<RejectionReport>& reports) {
  json j;
  j["version"] = kVersion;
  j["results"] = json::array();
  for (const auto& r : reports) {
    json row;
    row["config"] = config_to_json(r.config);
    row["replications"] = r.replications;
    if (r.oracle_score_variance) row["oracle_score_variance"] = *r.oracle_score_variance;
    json per_method = json::object();
    for (const auto& m : r.methods) {
      json mm;
      mm["rate"] = m.rate;
      mm["mc_se"] = m.mc_se;
      mm["rejections"] = m.rejections;
      mm["failures"] = m.failures;
      mm["mean_variance"] = m.mean_variance;
      mm["mean_coef_variance"] = m.mean_coef_variance;
      mm["mean_bandwidth"] = m.mean_bandwidth;
      per_method[method_name(m.method)] = mm;
    }
    row["methods"] = per_method;
    j["results"].push_back(row);
  }
  return j.dump(2) + "\n";
}

std::string estimate_text_table(const EstimateReport& r) {
  std::ostringstream out;
  out << "bandwidth M = " << r.bandwidth_used << (r.bandwidth_was_auto ? " (auto)" : " (fixed)")
      << ", within = " << (r.within_applied ? "yes" : "no")
      << ", intercept = " << (r.intercept ? "yes" : "no") << "\n";
  out << std::left << std::setw(14) << "coefficient" << std::right << std::setw(12)
      << "estimate";
  for (const auto& c : r.method_columns) out << std::setw(12) << ("se[" + c + "]");
  out << "\n";
  for (const auto& row : r.rows) {
    out << std::left << std::setw(14) << row.coefficient << std::right << std::setw(12)
        << fmt(row.estimate, 6);
    for (double se : row.se) {
      if (std::isnan(se)) out << std::setw(12) << "failed";
      else out << std::setw(12) << fmt(se, 6);
    }
    out << "\n";
  }
  for (const auto& f : r.failures) out << "note: " << f << "\n";
  return out.str();
}

std::string estimate_json_report(const EstimateReport& r) {
  json j;
  j["version"] = kVersion;
  j["csv"] = r.csv_path;
  j["bandwidth"] = r.bandwidth_used;
  j["bandwidth_auto"] = r.bandwidth_was_auto;
  j["within"] = r.within_applied;
  j["intercept"] = r.intercept;
  j["methods"] = r.method_columns;
  j["coefficients"] = json::array();
  for (const auto& row : r.rows) {
    json c;
    c["name"] = row.coefficient;
    c["estimate"] = row.estimate;
    json ses = json::object();
    for (std::size_t m = 0; m < r.method_columns.size(); ++m) {
      if (std::isnan(row.se[m])) ses[r.method_columns[m]] = nullptr;
      else ses[r.method_columns[m]] = row.se[m];
    }
    c["se"] = ses;
    j["coefficients"].push_back(c);
  }
  j["failures"] = r.failures;
  return j.dump(2) + "\n";
}

}  // namespace hetvar
