#pragma once

// Observation index space for two-way (cluster x time) panels: the cluster /
// time / cell index sets, the panel distance, and the neighborhood
// concentration diagnostics delta_n^d(s;k), Delta_n(s,m;k), c_n(s,m;k).

#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

namespace hetvar {

/// One observation's (cluster, time) labels as supplied by the caller.
struct PanelRecord {
  std::int64_t g = 0;
  std::int64_t t = 0;
};

/// Immutable index structure over n observations. Observation ids are dense
/// 0-based in input order. Cluster ids are densified to 0..G-1 in order of
/// first appearance; time ids are kept as given (1..T, gaps allowed and the
/// corresponding periods are simply empty).
class PanelIndex {
 public:
  static PanelIndex build(const std::vector<PanelRecord>& records);

  std::size_t n() const { return g_of_.size(); }
  std::size_t num_clusters() const { return by_cluster_.size(); }
  std::size_t num_periods() const { return by_time_.size(); }

  /// Dense 0-based cluster index of observation i.
  std::size_t cluster_of(std::size_t i) const { return g_of_[i]; }
  /// 1-based time index of observation i.
  std::size_t time_of(std::size_t i) const { return t_of_[i]; }
  /// Original cluster label for reporting.
  std::int64_t cluster_label(std::size_t c) const { return cluster_labels_[c]; }

  const std::vector<std::size_t>& obs_in_period(std::size_t t) const;  // t in 1..T
  const std::vector<std::size_t>& obs_in_cluster(std::size_t c) const;
  /// Observations in cell (t, c); empty cells yield an empty list.
  const std::vector<std::size_t>& obs_in_cell(std::size_t t, std::size_t c) const;

  std::size_t period_size(std::size_t t) const {
    return (t >= 1 && t <= num_periods()) ? by_time_[t - 1].size() : 0;
  }
  std::size_t cluster_size(std::size_t c) const { return by_cluster_[c].size(); }
  std::size_t cell_size(std::size_t t, std::size_t c) const;

  /// Nonempty cells as (t, c) keys, for iterating the T-and-G intersection.
  const std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>>& cells() const {
    return by_cell_;
  }

  void check_obs(std::size_t i) const {
    if (i >= n()) throw std::out_of_range("PanelIndex: observation index out of range");
  }

 private:
  std::vector<std::size_t> g_of_;
  std::vector<std::size_t> t_of_;
  std::vector<std::int64_t> cluster_labels_;
  std::vector<std::vector<std::size_t>> by_time_;     // index t-1
  std::vector<std::vector<std::size_t>> by_cluster_;  // dense cluster index
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> by_cell_;
};

/// Panel distance: 0 if i and j share a cluster or a period, else |t(i)-t(j)|.
std::size_t distance(const PanelIndex& p, std::size_t i, std::size_t j);

/// delta_n^d(s;k): average over observations of
///   (|N_{t+s}| + |N_{t-s}| + 1{s=0}(|N_g| - |N_t|))^k,
/// with |N_t| = 0 outside 1..T.
double delta_boundary(const PanelIndex& p, std::size_t s, double k);

/// Delta_n(s,m;k): same average with the inner count summed over lags
/// h = s..m (the h=0 correction term included when the window reaches 0).
/// Zero when s > m.
double delta_window(const PanelIndex& p, std::size_t s, std::size_t m, double k);

/// Grid of 25 log-spaced alpha values in (1.02, 16] used for the c_n infimum.
std::vector<double> default_alpha_grid();

/// c_n(s,m;k): grid minimum of
///   Delta_n(s,m;k*alpha)^(1/alpha) * delta_n^d(s; alpha/(alpha-1))^(1-1/alpha).
double neighborhood_cost(const PanelIndex& p, std::size_t s, std::size_t m, double k,
                         const std::vector<double>& alpha_grid);

/// Bundle of the three diagnostics over s = 0..s_max at fixed (m, k).
struct ConcentrationReport {
  std::size_t m = 0;
  double k = 1.0;
  std::vector<double> delta_boundary;   // index s
  std::vector<double> delta_window;     // index s
  std::vector<double> cost;             // index s
  std::vector<double> alpha_grid;
};

ConcentrationReport concentration_report(const PanelIndex& p, std::size_t s_max,
                                         std::size_t m, double k,
                                         const std::vector<double>& alpha_grid);

/// Dependence profile theta_{n,s} = rho_theta^s. Independence (rho = 0) is
/// treated as theta == 0 for every s, matching the convention under which
/// the rate assumptions hold trivially for independent data.
double theta_profile(double rho_theta, std::size_t s);

/// Finite-n left-hand sides of the rate conditions, evaluated with the
/// theta profile above. lambda_n must be supplied by the caller (the
/// variance scale is not identified from the index structure alone).
struct AssumptionDiagnostics {
  double clt_a_k1 = 0.0;   // (n/lambda^{3/2}) sum_s c_n(s,m;1) theta_s^{1-3/p}
  double clt_a_k2 = 0.0;   // (n/lambda^2)     sum_s c_n(s,m;2) theta_s^{1-4/p}
  double vcon = 0.0;       // (n/lambda^2)     sum_s c_n(s,M;2) theta_s^{1-4/p}
  double vadj_a = 0.0;     // (n/lambda) sum_m |w(m,M)-1| delta(m;1) theta_m^{1-2/p}
  double vadj_b = 0.0;     // (1/lambda) sum_m sum_{t,g} |cell||cell+m| theta_m^{1-2/p}
  double vadj_c = 0.0;     // (1/lambda) sum_{m>M} sum_t |N_t||N_{t+m}| theta_m^{1-2/p}
};

struct KernelSpec;  // kernel.hpp

AssumptionDiagnostics assumption_diagnostics(const PanelIndex& p, double rho_theta, double p_moment,
                                             const KernelSpec& kernel, double lambda_n,
                                             const std::vector<double>& alpha_grid);

}  // namespace hetvar
