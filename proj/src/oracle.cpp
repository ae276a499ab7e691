#include "hetvar/oracle.hpp"

#include <cmath>

namespace hetvar {

ComponentDgp ComponentDgp::scalar(PanelIndex panel, std::vector<double> mu, double s2_alpha,
                                  double s2_gamma_innov, double rho_, double s2_eps) {
  ComponentDgp d;
  d.panel = std::move(panel);
  d.v = 1;
  if (!mu.empty()) {
    d.mu.resize(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) d.mu[i] = {mu[i]};
  }
  d.sigma2_alpha = {s2_alpha};
  d.sigma2_gamma_innov = {s2_gamma_innov};
  d.rho = {rho_};
  d.sigma2_eps = {s2_eps};
  d.validate();
  return d;
}

void ComponentDgp::validate() const {
  if (v == 0) throw std::invalid_argument("ComponentDgp: v must be >= 1");
  if (sigma2_alpha.size() != v || sigma2_gamma_innov.size() != v || rho.size() != v ||
      sigma2_eps.size() != v)
    throw std::invalid_argument("ComponentDgp: parameter vectors must have length v");
  for (std::size_t c = 0; c < v; ++c) {
    if (sigma2_alpha[c] < 0 || sigma2_gamma_innov[c] < 0 || sigma2_eps[c] < 0)
      throw std::invalid_argument("ComponentDgp: variances must be nonnegative");
    if (!(std::abs(rho[c]) < 1.0))
      throw std::invalid_argument("ComponentDgp: |rho| must be < 1");
  }
  if (!mu.empty()) {
    if (mu.size() != panel.n())
      throw std::invalid_argument("ComponentDgp: mu must have one row per observation");
    for (const auto& row : mu)
      if (row.size() != v) throw std::invalid_argument("ComponentDgp: mu rows must have length v");
  }
}

SymMatrix population_cov(const ComponentDgp& d, std::size_t i, std::size_t j) {
  d.panel.check_obs(i);
  d.panel.check_obs(j);
  SymMatrix m(d.v);
  const bool same_g = d.panel.cluster_of(i) == d.panel.cluster_of(j);
  const std::size_t ti = d.panel.time_of(i), tj = d.panel.time_of(j);
  const std::size_t lag = ti > tj ? ti - tj : tj - ti;
  for (std::size_t c = 0; c < d.v; ++c) {
    double cov = d.gamma_stationary_var(c) * std::pow(d.rho[c], static_cast<double>(lag));
    if (same_g) cov += d.sigma2_alpha[c];
    if (i == j) cov += d.sigma2_eps[c];
    m.set(c, c, cov);
  }
  return m;
}

namespace {

// Per-coordinate scalar covariance, avoiding the SymMatrix round trip in
// the O(n^2) loops.
double cov_entry(const ComponentDgp& d, std::size_t i, std::size_t j, std::size_t c) {
  const bool same_g = d.panel.cluster_of(i) == d.panel.cluster_of(j);
  const std::size_t ti = d.panel.time_of(i), tj = d.panel.time_of(j);
  const std::size_t lag = ti > tj ? ti - tj : tj - ti;
  double cov = d.gamma_stationary_var(c) * std::pow(d.rho[c], static_cast<double>(lag));
  if (same_g) cov += d.sigma2_alpha[c];
  if (i == j) cov += d.sigma2_eps[c];
  return cov;
}

std::vector<double> mean_row(const ComponentDgp& d, std::size_t i) {
  if (d.mu.empty()) return std::vector<double>(d.v, 0.0);
  return d.mu[i];
}

// Double sum of w_ij * Cov(i,j) with w from the shared pair-weight table.
SymMatrix weighted_cov_double_sum(const ComponentDgp& d, Method method, const KernelSpec& k,
                                  bool drop_adjustment) {
  const std::size_t n = d.panel.n();
  std::vector<KahanSum> acc(d.v);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double w = detail::pair_weight(d.panel, i, j, method, k, drop_adjustment);
      if (w == 0.0) continue;
      for (std::size_t c = 0; c < d.v; ++c) acc[c].add(w * cov_entry(d, i, j, c));
    }
  SymMatrix m(d.v);
  for (std::size_t c = 0; c < d.v; ++c) m.set(c, c, acc[c].value());
  return m;
}

// Double sum of w_ij * mu_i mu_j' (full outer products).
SymMatrix weighted_mean_double_sum(const ComponentDgp& d, Method method, const KernelSpec& k,
                                   bool drop_adjustment) {
  SymMatrix m(d.v);
  if (d.mu.empty()) return m;
  const std::size_t n = d.panel.n();
  for (std::size_t i = 0; i < n; ++i) {
    const auto mi = mean_row(d, i);
    for (std::size_t j = 0; j < n; ++j) {
      const double w = detail::pair_weight(d.panel, i, j, method, k, drop_adjustment);
      if (w == 0.0) continue;
      const auto mj = mean_row(d, j);
      for (std::size_t a = 0; a < d.v; ++a)
        for (std::size_t b = a; b < d.v; ++b) m.add(a, b, w * mi[a] * mj[b]);
    }
  }
  return m;
}

// ---- factorized building blocks ----------------------------------------

struct CellTables {
  std::size_t T = 0, G = 0, v = 1;
  std::vector<double> n_t;                 // period sizes, index t-1
  std::vector<double> n_g;                 // cluster sizes
  std::vector<std::vector<double>> n_tg;   // [t-1][g] cell sizes
  std::vector<std::vector<double>> m_t;    // period mean sums, [t-1][c]
  std::vector<std::vector<double>> m_g;    // cluster mean sums
  std::vector<std::vector<std::vector<double>>> m_tg;  // [t-1][g][c]
};

CellTables make_tables(const ComponentDgp& d) {
  CellTables tb;
  const PanelIndex& p = d.panel;
  tb.T = p.num_periods();
  tb.G = p.num_clusters();
  tb.v = d.v;
  tb.n_t.resize(tb.T);
  tb.n_g.resize(tb.G);
  tb.n_tg.assign(tb.T, std::vector<double>(tb.G, 0.0));
  tb.m_t.assign(tb.T, std::vector<double>(d.v, 0.0));
  tb.m_g.assign(tb.G, std::vector<double>(d.v, 0.0));
  tb.m_tg.assign(tb.T, std::vector<std::vector<double>>(tb.G, std::vector<double>(d.v, 0.0)));
  for (std::size_t t = 1; t <= tb.T; ++t) tb.n_t[t - 1] = static_cast<double>(p.period_size(t));
  for (std::size_t g = 0; g < tb.G; ++g) tb.n_g[g] = static_cast<double>(p.cluster_size(g));
  for (std::size_t i = 0; i < p.n(); ++i) {
    const std::size_t t = p.time_of(i), g = p.cluster_of(i);
    tb.n_tg[t - 1][g] += 1.0;
    const auto mi = mean_row(d, i);
    for (std::size_t c = 0; c < d.v; ++c) {
      tb.m_t[t - 1][c] += mi[c];
      tb.m_g[g][c] += mi[c];
      tb.m_tg[t - 1][g][c] += mi[c];
    }
  }
  return tb;
}

// Covariance of the period aggregates: Cov(y_t, y_s) per coordinate.
double cov_y(const ComponentDgp& d, const CellTables& tb, std::size_t t, std::size_t s,
             std::size_t c) {
  const std::size_t lag = t > s ? t - s : s - t;
  double cross_g = 0.0;
  for (std::size_t g = 0; g < tb.G; ++g) cross_g += tb.n_tg[t - 1][g] * tb.n_tg[s - 1][g];
  double v = d.sigma2_alpha[c] * cross_g +
             d.gamma_stationary_var(c) * tb.n_t[t - 1] * tb.n_t[s - 1] *
                 std::pow(d.rho[c], static_cast<double>(lag));
  if (t == s) v += d.sigma2_eps[c] * tb.n_t[t - 1];
  return v;
}

// Same-cluster / same-period / cell covariance totals (the three CGM-shaped
// covariance sums), per coordinate.
void one_way_cov_totals(const ComponentDgp& d, const CellTables& tb, std::size_t c,
                        double& same_g, double& same_t, double& cell) {
  const double ss = d.gamma_stationary_var(c);
  KahanSum a, b, cl;
  // same cluster: pairs decompose over the cluster's period profile
  for (std::size_t g = 0; g < tb.G; ++g) {
    a.add(d.sigma2_alpha[c] * tb.n_g[g] * tb.n_g[g]);
    a.add(d.sigma2_eps[c] * tb.n_g[g]);
    for (std::size_t t = 1; t <= tb.T; ++t) {
      if (tb.n_tg[t - 1][g] == 0.0) continue;
      for (std::size_t s = 1; s <= tb.T; ++s) {
        if (tb.n_tg[s - 1][g] == 0.0) continue;
        const std::size_t lag = t > s ? t - s : s - t;
        a.add(ss * tb.n_tg[t - 1][g] * tb.n_tg[s - 1][g] *
              std::pow(d.rho[c], static_cast<double>(lag)));
      }
    }
  }
  for (std::size_t t = 1; t <= tb.T; ++t) {
    double cg = 0.0;
    for (std::size_t g = 0; g < tb.G; ++g) cg += tb.n_tg[t - 1][g] * tb.n_tg[t - 1][g];
    b.add(d.sigma2_alpha[c] * cg);
    b.add(ss * tb.n_t[t - 1] * tb.n_t[t - 1]);
    b.add(d.sigma2_eps[c] * tb.n_t[t - 1]);
  }
  for (std::size_t t = 1; t <= tb.T; ++t)
    for (std::size_t g = 0; g < tb.G; ++g) {
      const double ntg = tb.n_tg[t - 1][g];
      if (ntg == 0.0) continue;
      cl.add((d.sigma2_alpha[c] + ss) * ntg * ntg + d.sigma2_eps[c] * ntg);
    }
  same_g = a.value();
  same_t = b.value();
  cell = cl.value();
}

void add_outer_from(SymMatrix& m, const std::vector<double>& x, double c = 1.0) {
  m.add_outer(x, c);
}

}  // namespace

SymMatrix v_true(const ComponentDgp& d) {
  d.validate();
  const std::size_t n = d.panel.n();
  std::vector<KahanSum> acc(d.v);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t c = 0; c < d.v; ++c) acc[c].add(cov_entry(d, i, j, c));
  SymMatrix m(d.v);
  for (std::size_t c = 0; c < d.v; ++c) m.set(c, c, acc[c].value());
  return m;
}

SymMatrix v_true_factorized(const ComponentDgp& d) {
  d.validate();
  const CellTables tb = make_tables(d);
  SymMatrix m(d.v);
  for (std::size_t c = 0; c < d.v; ++c) {
    KahanSum acc;
    for (std::size_t g = 0; g < tb.G; ++g) acc.add(d.sigma2_alpha[c] * tb.n_g[g] * tb.n_g[g]);
    acc.add(d.sigma2_eps[c] * static_cast<double>(d.panel.n()));
    const double ss = d.gamma_stationary_var(c);
    for (std::size_t t = 1; t <= tb.T; ++t)
      for (std::size_t s = 1; s <= tb.T; ++s) {
        const std::size_t lag = t > s ? t - s : s - t;
        acc.add(ss * tb.n_t[t - 1] * tb.n_t[s - 1] *
                std::pow(d.rho[c], static_cast<double>(lag)));
      }
    m.set(c, c, acc.value());
  }
  return m;
}

SymMatrix v_adj(const ComponentDgp& d, const KernelSpec& k) {
  d.validate();
  const CellTables tb = make_tables(d);
  SymMatrix m(d.v);
  for (std::size_t c = 0; c < d.v; ++c) {
    double same_g, same_t, cell;
    one_way_cov_totals(d, tb, c, same_g, same_t, cell);
    KahanSum acc;
    acc.add(same_g);
    acc.add(same_t);
    acc.add(-cell);
    for (std::size_t lag = 1; lag <= k.bandwidth && lag < tb.T; ++lag) {
      const double w = kernel_weight(k, lag);
      if (w == 0.0) continue;
      for (std::size_t t = 1; t + lag <= tb.T; ++t)
        acc.add(2.0 * w * cov_y(d, tb, t, t + lag, c));
    }
    m.set(c, c, acc.value());
  }
  return m;
}

SymMatrix v_adj_double_sum(const ComponentDgp& d, const KernelSpec& k) {
  d.validate();
  // v_adj's pair expansion coincides with the CHS weights without the
  // within-cluster adjustment line.
  return weighted_cov_double_sum(d, Method::CHS, k, /*drop_adjustment=*/true);
}

SymMatrix omitted_within_cluster_lag_cov(const ComponentDgp& d) {
  d.validate();
  const CellTables tb = make_tables(d);
  SymMatrix m(d.v);
  for (std::size_t c = 0; c < d.v; ++c) {
    const double ss = d.gamma_stationary_var(c);
    KahanSum acc;
    for (std::size_t lag = 1; lag < tb.T; ++lag)
      for (std::size_t t = 1; t + lag <= tb.T; ++t)
        for (std::size_t g = 0; g < tb.G; ++g) {
          const double pairs = tb.n_tg[t - 1][g] * tb.n_tg[t + lag - 1][g];
          if (pairs == 0.0) continue;
          acc.add(2.0 * pairs *
                  (d.sigma2_alpha[c] + ss * std::pow(d.rho[c], static_cast<double>(lag))));
        }
    m.set(c, c, acc.value());
  }
  return m;
}

SymMatrix v_con_estimand(const ComponentDgp& d, const KernelSpec& k) {
  d.validate();
  const CellTables tb = make_tables(d);
  SymMatrix m(d.v);
  // covariance part
  for (std::size_t c = 0; c < d.v; ++c) {
    double same_g, same_t, cell;
    one_way_cov_totals(d, tb, c, same_g, same_t, cell);
    KahanSum acc;
    acc.add(same_g);
    acc.add(same_t);
    double var_y_total = 0.0;
    for (std::size_t t = 1; t <= tb.T; ++t) var_y_total += cov_y(d, tb, t, t, c);
    for (std::size_t lag = 1; lag <= k.bandwidth && lag < tb.T; ++lag) {
      const double w = kernel_weight(k, lag);
      if (w == 0.0) continue;
      for (std::size_t t = 1; t + lag <= tb.T; ++t)
        acc.add(2.0 * w * cov_y(d, tb, t, t + lag, c));
      acc.add(2.0 * w * var_y_total);
    }
    m.set(c, c, acc.value());
  }
  // mean part
  for (std::size_t g = 0; g < tb.G; ++g) add_outer_from(m, tb.m_g[g]);
  for (std::size_t t = 0; t < tb.T; ++t) add_outer_from(m, tb.m_t[t]);
  for (std::size_t lag = 1; lag <= k.bandwidth && lag < tb.T; ++lag) {
    const double w = kernel_weight(k, lag);
    if (w == 0.0) continue;
    for (std::size_t t = 1; t + lag <= tb.T; ++t)
      m.add_sym_outer(tb.m_t[t - 1], tb.m_t[t + lag - 1], w);
    for (std::size_t t = 0; t < tb.T; ++t) add_outer_from(m, tb.m_t[t], 2.0 * w);
  }
  return m;
}

SymMatrix v_con_estimand_double_sum(const ComponentDgp& d, const KernelSpec& k) {
  d.validate();
  SymMatrix m = weighted_cov_double_sum(d, Method::HM, k, false);
  m += weighted_mean_double_sum(d, Method::HM, k, false);
  return m;
}

SymMatrix v_chs_estimand(const ComponentDgp& d, const KernelSpec& k) {
  d.validate();
  const CellTables tb = make_tables(d);
  SymMatrix m(d.v);
  for (std::size_t c = 0; c < d.v; ++c) {
    double same_g, same_t, cell;
    one_way_cov_totals(d, tb, c, same_g, same_t, cell);
    const double ss = d.gamma_stationary_var(c);
    KahanSum acc;
    acc.add(same_g);
    acc.add(same_t);
    acc.add(-cell);
    for (std::size_t lag = 1; lag <= k.bandwidth && lag < tb.T; ++lag) {
      const double w = kernel_weight(k, lag);
      if (w == 0.0) continue;
      for (std::size_t t = 1; t + lag <= tb.T; ++t) {
        acc.add(2.0 * w * cov_y(d, tb, t, t + lag, c));
        for (std::size_t g = 0; g < tb.G; ++g) {
          const double pairs = tb.n_tg[t - 1][g] * tb.n_tg[t + lag - 1][g];
          if (pairs == 0.0) continue;
          acc.add(-2.0 * w * pairs *
                  (d.sigma2_alpha[c] + ss * std::pow(d.rho[c], static_cast<double>(lag))));
        }
      }
    }
    m.set(c, c, acc.value());
  }
  // mean part
  for (std::size_t g = 0; g < tb.G; ++g) add_outer_from(m, tb.m_g[g]);
  for (std::size_t t = 0; t < tb.T; ++t) add_outer_from(m, tb.m_t[t]);
  for (std::size_t t = 1; t <= tb.T; ++t)
    for (std::size_t g = 0; g < tb.G; ++g) add_outer_from(m, tb.m_tg[t - 1][g], -1.0);
  for (std::size_t lag = 1; lag <= k.bandwidth && lag < tb.T; ++lag) {
    const double w = kernel_weight(k, lag);
    if (w == 0.0) continue;
    for (std::size_t t = 1; t + lag <= tb.T; ++t) {
      m.add_sym_outer(tb.m_t[t - 1], tb.m_t[t + lag - 1], w);
      for (std::size_t g = 0; g < tb.G; ++g)
        m.add_sym_outer(tb.m_tg[t - 1][g], tb.m_tg[t + lag - 1][g], -w);
    }
  }
  return m;
}

SymMatrix v_chs_estimand_double_sum(const ComponentDgp& d, const KernelSpec& k) {
  d.validate();
  SymMatrix m = weighted_cov_double_sum(d, Method::CHS, k, false);
  m += weighted_mean_double_sum(d, Method::CHS, k, false);
  return m;
}

ChsBiasDecomposition chs_bias_decomposition(const ComponentDgp& d, const KernelSpec& k) {
  d.validate();
  if (d.v != 1)
    throw std::invalid_argument("chs_bias_decomposition: scalar DGPs only");
  const CellTables tb = make_tables(d);
  ChsBiasDecomposition out;
  for (std::size_t g = 0; g < tb.G; ++g) out.cluster += tb.m_g[g][0] * tb.m_g[g][0];
  for (std::size_t t = 0; t < tb.T; ++t) out.time += tb.m_t[t][0] * tb.m_t[t][0];
  for (std::size_t t = 1; t <= tb.T; ++t)
    for (std::size_t g = 0; g < tb.G; ++g)
      out.cell += tb.m_tg[t - 1][g][0] * tb.m_tg[t - 1][g][0];
  for (std::size_t lag = 1; lag <= k.bandwidth && lag < tb.T; ++lag) {
    const double w = kernel_weight(k, lag);
    for (std::size_t t = 1; t + lag <= tb.T; ++t) {
      out.serial += w * tb.m_t[t - 1][0] * tb.m_t[t + lag - 1][0];
      for (std::size_t g = 0; g < tb.G; ++g)
        out.within_cluster_serial += w * tb.m_tg[t - 1][g][0] * tb.m_tg[t + lag - 1][g][0];
    }
  }
  out.aggregate = out.cluster + out.time - out.cell + 2.0 * out.serial -
                  2.0 * out.within_cluster_serial;
  return out;
}

Example1Gap example1_gap(const std::vector<double>& means) {
  if (means.size() != 3)
    throw std::invalid_argument("example1_gap: exactly three period means required");
  const double sq = means[0] * means[0] + means[1] * means[1] + means[2] * means[2];
  const double cross = means[0] * means[1] + means[1] * means[2];
  Example1Gap g;
  g.d1 = sq + 2.0 * cross;
  g.d2 = 2.0 * sq + 2.0 * cross + 3.0;  // unit per-period variances
  return g;
}

EstimandReport psd_gap_report(const ComponentDgp& d, const KernelSpec& k) {
  EstimandReport r;
  r.v_true = v_true_factorized(d);
  r.v_adj = v_adj(d, k);
  r.v_con = v_con_estimand(d, k);
  r.v_chs = v_chs_estimand(d, k);
  r.lambda_n = sym_eigen_min(r.v_true);
  r.psd_gap_min_eig = sym_eigen_min(r.v_con - r.v_adj);
  r.chs_gap_min_eig = sym_eigen_min(r.v_chs - r.v_true);
  const double snorm = r.v_true.spectral_norm();
  if (r.lambda_n <= 1e-12 * std::max(snorm, 1.0)) {
    r.v_true_singular = true;
    return r;
  }
  // || v_true^{-1} v_adj - I ||_F
  std::vector<double> b(d.v * d.v);
  for (std::size_t i = 0; i < d.v; ++i)
    for (std::size_t j = 0; j < d.v; ++j) b[i * d.v + j] = r.v_adj(i, j);
  const auto x = solve_spd(r.v_true, b, d.v);
  KahanSum fro;
  for (std::size_t i = 0; i < d.v; ++i)
    for (std::size_t j = 0; j < d.v; ++j) {
      const double e = x[i * d.v + j] - (i == j ? 1.0 : 0.0);
      fro.add(e * e);
    }
  r.ratio_distance = std::sqrt(fro.value());
  return r;
}

}  // namespace hetvar
