// Python bindings for the hetvar core: panel construction, the variance
// estimators, population oracles, OLS + sandwich inference, and the Monte
// Carlo driver.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hetvar/csv.hpp"
#include "hetvar/oracle.hpp"
#include "hetvar/report.hpp"
#include "hetvar/run_config.hpp"

namespace py = pybind11;
using namespace hetvar;

namespace {

PanelIndex panel_from_records(const std::vector<std::pair<std::int64_t, std::int64_t>>& gt) {
  std::vector<PanelRecord> recs;
  recs.reserve(gt.size());
  for (const auto& [g, t] : gt) recs.push_back({g, t});
  return PanelIndex::build(recs);
}

std::vector<std::vector<double>> sym_to_rows(const SymMatrix& m) {
  std::vector<std::vector<double>> out(m.dim(), std::vector<double>(m.dim()));
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j) out[i][j] = m(i, j);
  return out;
}

KernelSpec make_kernel(const std::string& kind, std::size_t bandwidth) {
  KernelSpec k;
  if (kind == "triangular") k.kind = KernelKind::Triangular;
  else if (kind == "uniform") k.kind = KernelKind::Uniform;
  else throw std::invalid_argument("kernel kind must be 'triangular' or 'uniform'");
  k.bandwidth = bandwidth;
  return k;
}

Method make_method(const std::string& name) {
  const auto m = method_from_name(name);
  if (!m) throw std::invalid_argument("unknown method: " + name);
  return *m;
}

ComponentDgp make_scalar_dgp(const PanelIndex& panel, const std::vector<double>& mu,
                             double s2_alpha, double s2_gamma_innov, double rho,
                             double s2_eps) {
  return ComponentDgp::scalar(panel, mu, s2_alpha, s2_gamma_innov, rho, s2_eps);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Conservative variance estimation for two-way dependent panel scores";
  m.attr("__version__") = kVersion;

  py::class_<PanelIndex>(m, "PanelIndex")
      .def(py::init(&panel_from_records), py::arg("records"),
           "Build from a list of (g, t) pairs (positive integers)")
      .def_property_readonly("n", &PanelIndex::n)
      .def_property_readonly("num_clusters", &PanelIndex::num_clusters)
      .def_property_readonly("num_periods", &PanelIndex::num_periods)
      .def("cluster_of", &PanelIndex::cluster_of)
      .def("time_of", &PanelIndex::time_of)
      .def("__repr__", [](const PanelIndex& p) {
        return "PanelIndex(n=" + std::to_string(p.n()) +
               ", G=" + std::to_string(p.num_clusters()) +
               ", T=" + std::to_string(p.num_periods()) + ")";
      });

  m.def("distance", &distance, py::arg("panel"), py::arg("i"), py::arg("j"));
  m.def("delta_boundary", &delta_boundary, py::arg("panel"), py::arg("s"), py::arg("k"));
  m.def("delta_window", &delta_window, py::arg("panel"), py::arg("s"), py::arg("m"),
        py::arg("k"));
  m.def(
      "neighborhood_cost",
      [](const PanelIndex& p, std::size_t s, std::size_t mm, double k,
         const std::vector<double>& grid) {
        return neighborhood_cost(p, s, mm, k, grid.empty() ? default_alpha_grid() : grid);
      },
      py::arg("panel"), py::arg("s"), py::arg("m"), py::arg("k"),
      py::arg("alpha_grid") = std::vector<double>{});

  m.def(
      "kernel_weight",
      [](const std::string& kind, std::size_t bandwidth, std::size_t lag) {
        return kernel_weight(make_kernel(kind, bandwidth), lag);
      },
      py::arg("kind"), py::arg("bandwidth"), py::arg("lag"));
  m.def(
      "andrews_bandwidth",
      [](const std::vector<std::vector<double>>& series) {
        const auto r = andrews_bandwidth(series, series.size());
        return py::make_tuple(r.bandwidth, r.zero_variance);
      },
      py::arg("series"), "Returns (bandwidth, zero_variance_flag)");

  m.def(
      "variance_estimate",
      [](const PanelIndex& p, const std::vector<std::vector<double>>& scores,
         const std::string& method, const std::string& kernel, std::size_t bandwidth,
         bool chs_drop_adjustment) {
        const auto est = estimate(p, ScoreMatrix::from_rows(scores), make_method(method),
                                  make_kernel(kernel, bandwidth), chs_drop_adjustment);
        py::dict out;
        out["matrix"] = sym_to_rows(est.matrix);
        out["method"] = method_name(est.method);
        out["min_eigenvalue"] = est.min_eigenvalue;
        return out;
      },
      py::arg("panel"), py::arg("scores"), py::arg("method"),
      py::arg("kernel") = "triangular", py::arg("bandwidth") = 0,
      py::arg("chs_drop_adjustment") = false,
      "Unnormalized variance-of-sum estimate; scores is an n x v list of rows");

  m.def(
      "brute_force_estimate",
      [](const PanelIndex& p, const std::vector<std::vector<double>>& scores,
         const std::string& method, const std::string& kernel, std::size_t bandwidth,
         bool chs_drop_adjustment) {
        const auto est = brute_force(p, ScoreMatrix::from_rows(scores), make_method(method),
                                     make_kernel(kernel, bandwidth), chs_drop_adjustment);
        return sym_to_rows(est.matrix);
      },
      py::arg("panel"), py::arg("scores"), py::arg("method"),
      py::arg("kernel") = "triangular", py::arg("bandwidth") = 0,
      py::arg("chs_drop_adjustment") = false);

  py::class_<ComponentDgp>(m, "ComponentDgp")
      .def(py::init(&make_scalar_dgp), py::arg("panel"), py::arg("mu") = std::vector<double>{},
           py::arg("sigma2_alpha") = 1.0, py::arg("sigma2_gamma_innov") = 1.0,
           py::arg("rho") = 0.0, py::arg("sigma2_eps") = 1.0);

  m.def("v_true", [](const ComponentDgp& d) { return sym_to_rows(v_true_factorized(d)); });
  m.def(
      "v_adj",
      [](const ComponentDgp& d, const std::string& kind, std::size_t bw) {
        return sym_to_rows(v_adj(d, make_kernel(kind, bw)));
      },
      py::arg("dgp"), py::arg("kernel") = "triangular", py::arg("bandwidth") = 0);
  m.def(
      "v_con_estimand",
      [](const ComponentDgp& d, const std::string& kind, std::size_t bw) {
        return sym_to_rows(v_con_estimand(d, make_kernel(kind, bw)));
      },
      py::arg("dgp"), py::arg("kernel") = "triangular", py::arg("bandwidth") = 0);
  m.def(
      "v_chs_estimand",
      [](const ComponentDgp& d, const std::string& kind, std::size_t bw) {
        return sym_to_rows(v_chs_estimand(d, make_kernel(kind, bw)));
      },
      py::arg("dgp"), py::arg("kernel") = "triangular", py::arg("bandwidth") = 0);
  m.def("example1_gap", [](const std::vector<double>& means) {
    const auto g = example1_gap(means);
    return py::make_tuple(g.d1, g.d2);
  });
  m.def(
      "psd_gap_report",
      [](const ComponentDgp& d, const std::string& kind, std::size_t bw) {
        const auto r = psd_gap_report(d, make_kernel(kind, bw));
        py::dict out;
        out["lambda_n"] = r.lambda_n;
        out["psd_gap_min_eig"] = r.psd_gap_min_eig;
        out["chs_gap_min_eig"] = r.chs_gap_min_eig;
        out["v_true"] = sym_to_rows(r.v_true);
        out["v_adj"] = sym_to_rows(r.v_adj);
        out["v_con"] = sym_to_rows(r.v_con);
        out["v_chs"] = sym_to_rows(r.v_chs);
        if (r.ratio_distance) out["ratio_distance"] = *r.ratio_distance;
        return out;
      },
      py::arg("dgp"), py::arg("kernel") = "triangular", py::arg("bandwidth") = 0);

  m.def(
      "ols_sandwich",
      [](const std::vector<std::pair<std::int64_t, std::int64_t>>& records,
         const std::vector<double>& y, const std::vector<std::vector<double>>& X,
         const std::string& method, const std::string& kernel, long bandwidth, bool within,
         bool intercept) {
        PanelData data;
        for (const auto& [g, t] : records) data.records.push_back({g, t});
        data.has_y = true;
        data.y = y;
        data.x_rows = X;
        for (std::size_t j = 0; j < (X.empty() ? 0 : X[0].size()); ++j)
          data.x_names.push_back("x" + std::to_string(j + 1));
        Design d = to_design(data, intercept);
        if (within) d = within_transform(d);
        const FitResult fit = ols_fit(d);
        const BandwidthPolicy bw =
            bandwidth < 0
                ? BandwidthPolicy::automatic(make_kernel(kernel, 0).kind)
                : BandwidthPolicy::fixed(static_cast<std::size_t>(bandwidth),
                                         make_kernel(kernel, 0).kind);
        const auto inf = sandwich(d.panel, fit, make_method(method), bw, false, d.names);
        py::dict out;
        std::vector<py::dict> coef;
        for (const auto& c : inf.coef) {
          py::dict cd;
          cd["name"] = c.name;
          cd["estimate"] = c.estimate;
          cd["se"] = c.se;
          cd["t"] = c.t;
          cd["p"] = c.p;
          cd["ci"] = py::make_tuple(c.ci_lo, c.ci_hi);
          coef.push_back(cd);
        }
        out["coefficients"] = coef;
        out["bandwidth"] = inf.kernel_used.bandwidth;
        return out;
      },
      py::arg("records"), py::arg("y"), py::arg("X"), py::arg("method") = "HM",
      py::arg("kernel") = "triangular", py::arg("bandwidth") = -1, py::arg("within") = false,
      py::arg("intercept") = true,
      "Fit OLS on a panel and return sandwich inference for one method");

  m.def(
      "run_monte_carlo",
      [](std::size_t clusters, std::size_t periods, double rho, std::size_t replications,
         std::uint64_t seed, const std::vector<std::string>& methods,
         const std::string& het_pattern, double het_amplitude, std::size_t threads) {
        SimulationConfig c;
        c.clusters = clusters;
        c.periods = periods;
        c.rho = rho;
        c.replications = replications;
        c.master_seed = seed;
        if (!methods.empty()) {
          c.methods.clear();
          for (const auto& name : methods) c.methods.push_back(make_method(name));
        }
        const auto p = het_pattern_from_name(het_pattern);
        if (!p) throw std::invalid_argument("unknown het pattern: " + het_pattern);
        c.het_pattern = *p;
        c.het_amplitude = het_amplitude;
        const auto rep = run_monte_carlo(c, threads);
        py::dict out;
        for (const auto& mr : rep.methods) {
          py::dict d;
          d["rate"] = mr.rate;
          d["mc_se"] = mr.mc_se;
          d["rejections"] = mr.rejections;
          d["failures"] = mr.failures;
          d["mean_variance"] = mr.mean_variance;
          out[method_name(mr.method).c_str()] = d;
        }
        if (rep.oracle_score_variance) out["oracle_score_variance"] = *rep.oracle_score_variance;
        return out;
      },
      py::arg("clusters"), py::arg("periods"), py::arg("rho"), py::arg("replications"),
      py::arg("seed") = 20260808, py::arg("methods") = std::vector<std::string>{},
      py::arg("het_pattern") = "checkerboard", py::arg("het_amplitude") = 0.1,
      py::arg("threads") = 1);

  m.def(
      "clt_check",
      [](const ComponentDgp& d, std::size_t R, std::uint64_t seed) {
        return clt_check(d, R, seed);
      },
      py::arg("dgp"), py::arg("replications"), py::arg("seed") = 20260808);

  m.def(
      "simulate_panel",
      [](std::size_t clusters, std::size_t periods, double rho, std::size_t rep_index,
         std::uint64_t seed, const std::string& het_pattern, double het_amplitude) {
        SimulationConfig c;
        c.clusters = clusters;
        c.periods = periods;
        c.rho = rho;
        c.master_seed = seed;
        const auto p = het_pattern_from_name(het_pattern);
        if (!p) throw std::invalid_argument("unknown het pattern: " + het_pattern);
        c.het_pattern = *p;
        c.het_amplitude = het_amplitude;
        const Design d = simulate_panel(c, rep_index);
        std::vector<std::pair<std::int64_t, std::int64_t>> records;
        std::vector<double> x;
        for (std::size_t i = 0; i < d.panel.n(); ++i) {
          records.emplace_back(d.panel.cluster_label(d.panel.cluster_of(i)),
                               static_cast<std::int64_t>(d.panel.time_of(i)));
          x.push_back(d.X(i, 1));
        }
        py::dict out;
        out["records"] = records;
        out["y"] = d.y;
        out["x"] = x;
        return out;
      },
      py::arg("clusters"), py::arg("periods"), py::arg("rho"), py::arg("rep_index") = 0,
      py::arg("seed") = 20260808, py::arg("het_pattern") = "checkerboard",
      py::arg("het_amplitude") = 0.1,
      "One replication's panel draw: (g,t) records, response y, regressor x");
}
