#include "hetvar/panel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "hetvar/kernel.hpp"
#include "hetvar/numerics.hpp"

namespace hetvar {

PanelIndex PanelIndex::build(const std::vector<PanelRecord>& records) {
  if (records.empty()) throw std::invalid_argument("build_panel: empty input");
  PanelIndex p;
  const std::size_t n = records.size();
  p.g_of_.resize(n);
  p.t_of_.resize(n);

  std::unordered_map<std::int64_t, std::size_t> cluster_ids;
  std::size_t t_max = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (records[i].g <= 0 || records[i].t <= 0)
      throw std::invalid_argument("build_panel: ids must be positive integers");
    auto [it, inserted] = cluster_ids.try_emplace(records[i].g, cluster_ids.size());
    if (inserted) p.cluster_labels_.push_back(records[i].g);
    p.g_of_[i] = it->second;
    p.t_of_[i] = static_cast<std::size_t>(records[i].t);
    t_max = std::max(t_max, p.t_of_[i]);
  }

  p.by_cluster_.resize(cluster_ids.size());
  p.by_time_.resize(t_max);
  for (std::size_t i = 0; i < n; ++i) {
    p.by_cluster_[p.g_of_[i]].push_back(i);
    p.by_time_[p.t_of_[i] - 1].push_back(i);
    p.by_cell_[{p.t_of_[i], p.g_of_[i]}].push_back(i);
  }
  return p;
}

const std::vector<std::size_t>& PanelIndex::obs_in_period(std::size_t t) const {
  static const std::vector<std::size_t> empty;
  if (t < 1 || t > by_time_.size()) return empty;
  return by_time_[t - 1];
}

const std::vector<std::size_t>& PanelIndex::obs_in_cluster(std::size_t c) const {
  return by_cluster_.at(c);
}

const std::vector<std::size_t>& PanelIndex::obs_in_cell(std::size_t t, std::size_t c) const {
  static const std::vector<std::size_t> empty;
  auto it = by_cell_.find({t, c});
  return it == by_cell_.end() ? empty : it->second;
}

std::size_t PanelIndex::cell_size(std::size_t t, std::size_t c) const {
  auto it = by_cell_.find({t, c});
  return it == by_cell_.end() ? 0 : it->second.size();
}

std::size_t distance(const PanelIndex& p, std::size_t i, std::size_t j) {
  p.check_obs(i);
  p.check_obs(j);
  if (p.cluster_of(i) == p.cluster_of(j) || p.time_of(i) == p.time_of(j)) return 0;
  const std::size_t ti = p.time_of(i), tj = p.time_of(j);
  return ti > tj ? ti - tj : tj - ti;
}

namespace {

// |N_{t+s}| + |N_{t-s}| + 1{s=0}(|N_g| - |N_t|) for observation i.
double boundary_count(const PanelIndex& p, std::size_t i, std::size_t s) {
  const std::size_t t = p.time_of(i);
  double c = static_cast<double>(p.period_size(t + s));
  if (t > s) c += static_cast<double>(p.period_size(t - s));
  if (s == 0) {
    // t + 0 and t - 0 both hit |N_t|; the correction swaps one copy for |N_g|.
    c += static_cast<double>(p.cluster_size(p.cluster_of(i))) -
         static_cast<double>(p.period_size(t));
  }
  return c;
}

}  // namespace

double delta_boundary(const PanelIndex& p, std::size_t s, double k) {
  KahanSum acc;
  for (std::size_t i = 0; i < p.n(); ++i) acc.add(std::pow(boundary_count(p, i, s), k));
  return acc.value() / static_cast<double>(p.n());
}

double delta_window(const PanelIndex& p, std::size_t s, std::size_t m, double k) {
  if (s > m) return 0.0;
  KahanSum acc;
  for (std::size_t i = 0; i < p.n(); ++i) {
    double inner = 0.0;
    for (std::size_t h = s; h <= m; ++h) inner += boundary_count(p, i, h);
    acc.add(std::pow(inner, k));
  }
  return acc.value() / static_cast<double>(p.n());
}

std::vector<double> default_alpha_grid() {
  // 25 log-spaced points in (1.02, 16]; the first point sits strictly above
  // 1.02 so the Hoelder exponents stay valid.
  std::vector<double> grid(25);
  const double lo = std::log(1.02), hi = std::log(16.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = std::exp(lo + (hi - lo) * static_cast<double>(i + 1) / 25.0);
  }
  return grid;
}

double neighborhood_cost(const PanelIndex& p, std::size_t s, std::size_t m, double k,
                         const std::vector<double>& alpha_grid) {
  if (alpha_grid.empty()) throw std::invalid_argument("neighborhood_cost: empty alpha grid");
  for (double a : alpha_grid)
    if (!(a > 1.0)) throw std::invalid_argument("neighborhood_cost: grid points must be > 1");
  double best = std::numeric_limits<double>::infinity();
  for (double a : alpha_grid) {
    const double dw = delta_window(p, s, m, k * a);
    if (dw == 0.0) return 0.0;
    const double db = delta_boundary(p, s, a / (a - 1.0));
    const double v = std::pow(dw, 1.0 / a) * std::pow(db, 1.0 - 1.0 / a);
    best = std::min(best, v);
  }
  return best;
}

ConcentrationReport concentration_report(const PanelIndex& p, std::size_t s_max,
                                         std::size_t m, double k,
                                         const std::vector<double>& alpha_grid) {
  ConcentrationReport r;
  r.m = m;
  r.k = k;
  r.alpha_grid = alpha_grid;
  for (std::size_t s = 0; s <= s_max; ++s) {
    r.delta_boundary.push_back(delta_boundary(p, s, k));
    r.delta_window.push_back(delta_window(p, s, m, k));
    r.cost.push_back(neighborhood_cost(p, s, m, k, alpha_grid));
  }
  return r;
}

double theta_profile(double rho_theta, std::size_t s) {
  if (rho_theta == 0.0) return 0.0;
  return std::pow(rho_theta, static_cast<double>(s));
}

AssumptionDiagnostics assumption_diagnostics(const PanelIndex& p, double rho_theta,
                                             double p_moment, const KernelSpec& kernel,
                                             double lambda_n,
                                             const std::vector<double>& alpha_grid) {
  if (!(p_moment > 4.0))
    throw std::invalid_argument("assumption_diagnostics: moment order p must exceed 4");
  if (!(lambda_n > 0.0))
    throw std::invalid_argument("assumption_diagnostics: lambda_n must be positive");

  AssumptionDiagnostics d;
  const double n = static_cast<double>(p.n());
  const std::size_t T = p.num_periods();
  const std::size_t M = kernel.bandwidth;

  // Neighborhoods are empty beyond s = T-1, so the s-sums truncate there.
  KahanSum a1, a2, vc;
  for (std::size_t s = 0; s + 1 <= T; ++s) {
    const double th = theta_profile(rho_theta, s);
    a1.add(neighborhood_cost(p, s, M, 1.0, alpha_grid) * std::pow(th, 1.0 - 3.0 / p_moment));
    const double c2 = neighborhood_cost(p, s, M, 2.0, alpha_grid);
    const double w = std::pow(th, 1.0 - 4.0 / p_moment);
    a2.add(c2 * w);
    vc.add(c2 * w);
  }
  d.clt_a_k1 = n / std::pow(lambda_n, 1.5) * a1.value();
  d.clt_a_k2 = n / (lambda_n * lambda_n) * a2.value();
  d.vcon = d.clt_a_k2;  // same expression at m_n = M

  KahanSum va, vb, vcnd;
  for (std::size_t m = 1; m + 1 <= T; ++m) {
    const double th_pow = std::pow(theta_profile(rho_theta, m), 1.0 - 2.0 / p_moment);
    if (m <= M) {
      va.add(std::abs(kernel_weight(kernel, m) - 1.0) * delta_boundary(p, m, 1.0) * th_pow);
    } else {
      double tsum = 0.0;
      for (std::size_t t = 1; t + m <= T; ++t)
        tsum += static_cast<double>(p.period_size(t)) *
                static_cast<double>(p.period_size(t + m));
      vcnd.add(tsum * th_pow);
    }
    double cell_sum = 0.0;
    for (const auto& [key, obs] : p.cells()) {
      const auto [t, g] = key;
      if (t + m <= T) cell_sum += static_cast<double>(obs.size()) *
                                  static_cast<double>(p.cell_size(t + m, g));
    }
    vb.add(cell_sum * th_pow);
  }
  d.vadj_a = n / lambda_n * va.value();
  d.vadj_b = vb.value() / lambda_n;
  d.vadj_c = vcnd.value() / lambda_n;
  return d;
}

}  // namespace hetvar
