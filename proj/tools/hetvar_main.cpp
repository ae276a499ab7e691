// hetvar command line: panel CSV estimation, simulation campaigns,
// dependence diagnostics, and the analytic oracle checker.
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 check failure.

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hetvar/csv.hpp"
#include "hetvar/oracle.hpp"
#include "hetvar/report.hpp"
#include "hetvar/run_config.hpp"

namespace hv = hetvar;

namespace {

std::uint64_t seed_env_override(std::uint64_t fallback) {
  if (const char* env = std::getenv(hv::kSeedEnvVar)) {
    try {
      return std::stoull(env);
    } catch (...) {
      throw hv::ConfigError(std::string(hv::kSeedEnvVar) + " is not a valid seed: " + env);
    }
  }
  return fallback;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

int cmd_estimate(const std::string& csv_path, const std::vector<std::string>& method_names,
                 const std::string& kernel_name, const std::string& bandwidth_arg, bool within,
                 const std::string& intercept_arg, bool chs_drop, const std::string& out_path) {
  hv::PanelData data;
  try {
    data = hv::load_panel_csv(csv_path);
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  }

  bool intercept;
  if (intercept_arg == "auto") intercept = !within;
  else if (intercept_arg == "on") intercept = true;
  else if (intercept_arg == "off") intercept = false;
  else {
    std::cerr << "usage error: --intercept must be auto|on|off\n";
    return 1;
  }

  hv::KernelKind kind;
  if (kernel_name == "triangular") kind = hv::KernelKind::Triangular;
  else if (kernel_name == "uniform") kind = hv::KernelKind::Uniform;
  else {
    std::cerr << "usage error: --kernel must be triangular|uniform\n";
    return 1;
  }

  hv::BandwidthPolicy bw = hv::BandwidthPolicy::automatic(kind);
  if (bandwidth_arg != "auto") {
    try {
      bw = hv::BandwidthPolicy::fixed(std::stoul(bandwidth_arg), kind);
    } catch (...) {
      std::cerr << "usage error: --bandwidth must be 'auto' or a nonnegative integer\n";
      return 1;
    }
  }

  std::vector<hv::Method> methods;
  for (const auto& name : method_names) {
    const auto m = hv::method_from_name(name);
    if (!m) {
      std::cerr << "usage error: unknown method '" << name << "'\n";
      return 1;
    }
    methods.push_back(*m);
  }

  try {
    hv::Design design = hv::to_design(data, intercept);
    if (within) design = hv::within_transform(design);
    const hv::FitResult fit = hv::ols_fit(design);

    hv::EstimateReport rep;
    rep.csv_path = csv_path;
    rep.within_applied = within;
    rep.intercept = intercept;
    rep.bandwidth_was_auto = bw.auto_select;

    struct Column {
      std::string display;
      hv::Method method;
      bool drop_adjustment;
    };
    std::vector<Column> columns;
    for (hv::Method m : methods) {
      if (m == hv::Method::CHS && !chs_drop) {
        // both CHS variants unless the adjustment flag is forced
        columns.push_back({"CHS", m, false});
        columns.push_back({"CHS-na", m, true});
      } else {
        columns.push_back({hv::method_name(m), m, m == hv::Method::CHS && chs_drop});
      }
    }

    std::vector<std::vector<double>> se_cols;
    std::size_t ok = 0;
    for (const auto& col : columns) {
      rep.method_columns.push_back(col.display);
      std::vector<double> ses(fit.beta.size(), std::nan(""));
      try {
        const hv::InferenceResult inf =
            hv::sandwich(design.panel, fit, col.method, bw, col.drop_adjustment, design.names);
        for (std::size_t j = 0; j < inf.coef.size(); ++j) ses[j] = inf.coef[j].se;
        if (inf.kernel_used.bandwidth > 0) rep.bandwidth_used = inf.kernel_used.bandwidth;
        if (inf.bandwidth_zero_variance)
          rep.failures.push_back(col.display +
                                 ": degenerate score series, bandwidth floored at 1");
        ++ok;
      } catch (const hv::NegativeVarianceError& e) {
        rep.failures.push_back(col.display + ": " + e.what());
      }
      se_cols.push_back(std::move(ses));
    }
    for (std::size_t j = 0; j < fit.beta.size(); ++j) {
      hv::EstimateRow row;
      row.coefficient = j < design.names.size() ? design.names[j] : ("x" + std::to_string(j));
      row.estimate = fit.beta[j];
      for (const auto& col : se_cols) row.se.push_back(col[j]);
      rep.rows.push_back(row);
    }

    std::cout << hv::estimate_text_table(rep);
    if (!out_path.empty()) hv::write_file_atomic(out_path, hv::estimate_json_report(rep));
    return ok > 0 ? 0 : 2;
  } catch (const hv::SingularMatrixError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_simulate(const std::string& config_path, long reps_override, long long seed_override,
                 std::size_t threads, const std::string& out_path,
                 const std::string& out_csv_path) {
  hv::RunConfig rc;
  try {
    rc = hv::load_run_config(config_path);
    for (auto& row : rc.rows) {
      if (reps_override > 0) row.replications = static_cast<std::size_t>(reps_override);
      if (seed_override >= 0) row.master_seed = static_cast<std::uint64_t>(seed_override);
      row.master_seed = seed_env_override(row.master_seed);
      row.validate();
    }
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  std::vector<hv::RejectionReport> reports;
  for (const auto& row : rc.rows) reports.push_back(hv::run_monte_carlo(row, threads));

  std::cout << hv::simulation_text_table(reports);
  if (!out_path.empty())
    hv::write_file_atomic(out_path, hv::simulation_json_report(reports));
  if (!out_csv_path.empty())
    hv::write_file_atomic(out_csv_path, hv::simulation_csv_table(reports));
  return 0;
}

int cmd_check(const std::string& examples, bool props, std::size_t prop_trials,
              std::uint64_t seed, const std::string& out_path) {
  int failures = 0;
  std::string log;
  auto report = [&](const std::string& name, bool pass, const std::string& detail = "") {
    std::string line = "check[" + name + "]: " + (pass ? "PASS" : "FAIL");
    if (!detail.empty()) line += "  " + detail;
    line += "\n";
    std::cout << line;
    log += line;
    if (!pass) ++failures;
  };
  const bool all = examples == "all";

  if (all || examples == "1") {
    const auto g = hv::example1_gap({0.5, -1.0, 0.5});
    report("example1 D1", std::abs(g.d1 - (-0.5)) < 1e-15,
           "D1(0.5,-1,0.5) = " + std::to_string(g.d1));
    hv::RngStream rng(seed, 0, 101);
    bool ok = true;
    for (std::size_t i = 0; i < 1000 && ok; ++i) {
      std::vector<double> m = {rng.next_normal(), rng.next_normal(), rng.next_normal()};
      ok = hv::example1_gap(m).d2 >= 0.0;
    }
    report("example1 D2 nonnegative", ok, "1000 random mean triples");
  }

  if (all || examples == "3") {
    // 2 clusters x 4 periods, one observation per cell, means only.
    std::vector<hv::PanelRecord> recs;
    std::vector<double> mu_fixture, mu_alternating;
    const double fixture[2][4] = {{-1, -1, 1, 1}, {1, -1, -1, 1}};
    for (std::int64_t g = 1; g <= 2; ++g)
      for (std::int64_t t = 1; t <= 4; ++t) {
        recs.push_back({g, t});
        mu_fixture.push_back(fixture[g - 1][t - 1]);
        mu_alternating.push_back(t % 2 == 1 ? 1.0 : -1.0);
      }
    const hv::KernelSpec uniform1{hv::KernelKind::Uniform, 1};
    auto panel = hv::PanelIndex::build(recs);

    const auto dgp_fix = hv::ComponentDgp::scalar(panel, mu_fixture, 0, 0, 0, 0);
    const auto dec = hv::chs_bias_decomposition(dgp_fix, uniform1);
    const double gap =
        hv::v_chs_estimand(dgp_fix, uniform1)(0, 0) - hv::v_true(dgp_fix)(0, 0);
    report("example3 decomposition identity", std::abs(dec.aggregate - gap) < 1e-12,
           "terms (" + std::to_string(dec.cluster) + ", " + std::to_string(dec.time) + ", " +
               std::to_string(dec.cell) + ", " + std::to_string(dec.serial) + ", " +
               std::to_string(dec.within_cluster_serial) + "), gap = " + std::to_string(gap));

    const auto dgp_alt = hv::ComponentDgp::scalar(panel, mu_alternating, 0, 0, 0, 0);
    const double gap_alt =
        hv::v_chs_estimand(dgp_alt, uniform1)(0, 0) - hv::v_true(dgp_alt)(0, 0);
    report("example3 alternating-means bias", std::abs(gap_alt - (-4.0)) < 1e-12,
           "gap = " + std::to_string(gap_alt) + " (anticonservative)");
  }

  if (all || examples == "4") {
    bool ok = true;
    std::string detail;
    for (std::size_t T = 2; T <= 10 && ok; ++T) {
      std::vector<hv::PanelRecord> recs;
      for (std::int64_t g = 1; g <= static_cast<std::int64_t>(T); ++g)
        for (std::int64_t t = 1; t <= static_cast<std::int64_t>(T); ++t) recs.push_back({g, t});
      const auto dgp = hv::ComponentDgp::scalar(hv::PanelIndex::build(recs), {}, 1, 1, 0, 1);
      const double vt = hv::v_true(dgp)(0, 0);
      const double tt = static_cast<double>(T);
      // closed form for the two-way component DGP at rho = 0
      const double closed = 2.0 * tt * tt * tt + tt * tt;
      // the one-way-robust estimand at M = 0 overestimates by sum_i Var(Y_i)
      const hv::KernelSpec m0{hv::KernelKind::Uniform, 0};
      const double cgm2 = hv::v_con_estimand(dgp, m0)(0, 0);
      const double overest = cgm2 - vt;
      const double sum_var = 3.0 * tt * tt;
      if (std::abs(vt - closed) > 1e-9 * closed || std::abs(overest - sum_var) > 1e-9 * sum_var) {
        ok = false;
        detail = "T=" + std::to_string(T) + ": v_true=" + std::to_string(vt) +
                 ", closed=" + std::to_string(closed);
      }
    }
    report("example4 closed form + overestimate identity", ok,
           ok ? "T=2..10" : detail);
  }

  if (props) {
    hv::RngStream rng(seed, 1, 202);
    std::size_t pass_count = 0;
    for (std::size_t trial = 0; trial < prop_trials; ++trial) {
      const std::size_t G = 2 + (rng.next_u64() % 11);
      const std::size_t T = 2 + (rng.next_u64() % 11);
      std::vector<hv::PanelRecord> recs;
      std::vector<double> mu;
      for (std::int64_t g = 1; g <= static_cast<std::int64_t>(G); ++g)
        for (std::int64_t t = 1; t <= static_cast<std::int64_t>(T); ++t) {
          recs.push_back({g, t});
          mu.push_back(2.0 * rng.next_normal());
        }
      const auto dgp = hv::ComponentDgp::scalar(
          hv::PanelIndex::build(recs), mu, rng.next_uniform(), rng.next_uniform(),
          -0.9 + 1.8 * rng.next_uniform(), rng.next_uniform());
      hv::KernelSpec k;
      k.kind = (rng.next_u64() % 2 == 0) ? hv::KernelKind::Triangular : hv::KernelKind::Uniform;
      k.bandwidth = rng.next_u64() % T;
      const auto r = hv::psd_gap_report(dgp, k);
      const double tol = 1e-10 * std::max(1.0, r.v_con.spectral_norm());
      if (r.psd_gap_min_eig >= -tol) ++pass_count;
    }
    report("conservative-gap PSD", pass_count == prop_trials,
           std::to_string(pass_count) + "/" + std::to_string(prop_trials) + " trials");
  }

  if (!out_path.empty()) hv::write_file_atomic(out_path, log);
  return failures == 0 ? 0 : 3;
}

int cmd_diagnose(const std::string& csv_path, std::size_t s_max, long m_arg, double k,
                 const std::string& alpha_grid_arg, double rho_theta, double p_moment,
                 double lambda_arg, const std::string& out_path) {
  hv::PanelData data;
  try {
    data = hv::load_panel_csv(csv_path);
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  }
  try {
    const auto panel = hv::PanelIndex::build(data.records);
    const std::size_t T = panel.num_periods();
    if (s_max == 0) s_max = std::min<std::size_t>(T > 0 ? T - 1 : 0, 10);
    const std::size_t m = m_arg >= 0 ? static_cast<std::size_t>(m_arg) : s_max;
    std::vector<double> grid = alpha_grid_arg.empty() ? hv::default_alpha_grid()
                                                      : parse_double_list(alpha_grid_arg);
    const auto rep = hv::concentration_report(panel, s_max, m, k, grid);

    std::ostringstream out;
    out << "n=" << panel.n() << " G=" << panel.num_clusters() << " T=" << T << " (m=" << m
        << ", k=" << k << ")\n";
    out << "  s    delta(s;k)    Delta(s,m;k)    c(s,m;k)\n";
    char buf[160];
    for (std::size_t s = 0; s <= s_max; ++s) {
      std::snprintf(buf, sizeof buf, "%3zu  %12.6g  %14.6g  %10.6g\n", s,
                    rep.delta_boundary[s], rep.delta_window[s], rep.cost[s]);
      out << buf;
    }

    const double lambda_n = lambda_arg > 0 ? lambda_arg : static_cast<double>(panel.n());
    hv::KernelSpec kern{hv::KernelKind::Triangular, std::min(m, T > 0 ? T - 1 : 0)};
    const auto diag =
        hv::assumption_diagnostics(panel, rho_theta, p_moment, kern, lambda_n, grid);
    out << "rate expressions (theta_s = rho_theta^s, rho_theta=" << rho_theta
        << ", p=" << p_moment << ", lambda=" << lambda_n << "):\n";
    std::snprintf(buf, sizeof buf,
                  "  clt(k=1)=%.6g  clt(k=2)=%.6g  vcon=%.6g\n  kernel-bias=%.6g  "
                  "cell-overlap=%.6g  truncation=%.6g\n",
                  diag.clt_a_k1, diag.clt_a_k2, diag.vcon, diag.vadj_a, diag.vadj_b,
                  diag.vadj_c);
    out << buf;

    std::cout << out.str();
    if (!out_path.empty()) hv::write_file_atomic(out_path, out.str());
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hetvar: variance estimation for cluster- and serially-dependent panel scores"};
  app.require_subcommand(1);

  // estimate
  auto* est = app.add_subcommand("estimate", "OLS + sandwich standard errors from a panel CSV");
  std::string est_csv, est_kernel = "triangular", est_bw = "auto", est_intercept = "auto";
  std::string est_out;
  std::vector<std::string> est_methods = {"EHW", "CRg", "CRt", "CGM", "CHS", "HM"};
  bool est_within = false, est_chs_drop = false;
  est->add_option("csv", est_csv, "panel CSV (g,t,y,x1..xk)")->required();
  est->add_option("--methods", est_methods, "methods to report")->delimiter(',');
  est->add_option("--kernel", est_kernel, "triangular|uniform");
  est->add_option("--bandwidth", est_bw, "auto or integer M");
  est->add_flag("--within", est_within, "two-way within transformation first");
  est->add_option("--intercept", est_intercept, "auto|on|off");
  est->add_flag("--chs-drop-adjustment", est_chs_drop,
                "force the CHS variant without the double-counting adjustment");
  est->add_option("--out", est_out, "machine-readable JSON report path");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo rejection-rate campaign");
  std::string sim_config, sim_out, sim_out_csv;
  long sim_reps = -1;
  long long sim_seed = -1;
  std::size_t sim_threads = 1;
  sim->add_option("config", sim_config, "JSON run configuration")->required();
  sim->add_option("--reps", sim_reps, "override replications per row");
  sim->add_option("--seed", sim_seed, "override master seed");
  sim->add_option("--threads", sim_threads, "worker threads");
  sim->add_option("--out", sim_out, "JSON report path");
  sim->add_option("--out-csv", sim_out_csv, "CSV rejection table path");

  // check
  auto* chk = app.add_subcommand("check", "analytic oracle checks");
  std::string chk_examples = "all", chk_out;
  bool chk_props = false;
  std::size_t chk_trials = 200;
  std::uint64_t chk_seed = 12345;
  chk->add_option("--examples", chk_examples, "all|1|3|4");
  chk->add_option("--out", chk_out, "write the check lines to a file");
  chk->add_flag("--props", chk_props, "run randomized PSD property trials");
  chk->add_option("--prop-trials", chk_trials, "number of randomized trials");
  chk->add_option("--seed", chk_seed, "seed for randomized checks");

  // diagnose
  auto* dia = app.add_subcommand("diagnose", "neighborhood concentration diagnostics");
  std::string dia_csv, dia_grid, dia_out;
  std::size_t dia_smax = 0;
  long dia_m = -1;
  double dia_k = 1.0, dia_rho = 0.5, dia_p = 8.0, dia_lambda = 0.0;
  dia->add_option("csv", dia_csv, "panel CSV (only g,t needed)")->required();
  dia->add_option("--s-max", dia_smax, "largest distance s (default min(T-1,10))");
  dia->add_option("--m", dia_m, "window end m (default s-max)");
  dia->add_option("--k", dia_k, "moment exponent k");
  dia->add_option("--alpha-grid", dia_grid, "comma list of alpha > 1");
  dia->add_option("--rho-theta", dia_rho, "dependence profile theta_s = rho^s");
  dia->add_option("--p-moment", dia_p, "moment order p > 4");
  dia->add_option("--lambda", dia_lambda, "variance scale lambda_n (default n)");
  dia->add_option("--out", dia_out, "write the text report to a file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (est->parsed())
      return cmd_estimate(est_csv, est_methods, est_kernel, est_bw, est_within, est_intercept,
                          est_chs_drop, est_out);
    if (sim->parsed())
      return cmd_simulate(sim_config, sim_reps, sim_seed, sim_threads, sim_out, sim_out_csv);
    if (chk->parsed())
      return cmd_check(chk_examples, chk_props, chk_trials, chk_seed, chk_out);
    if (dia->parsed())
      return cmd_diagnose(dia_csv, dia_smax, dia_m, dia_k, dia_grid, dia_rho, dia_p, dia_lambda,
                          dia_out);
  } catch (const hv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const hv::CsvError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
