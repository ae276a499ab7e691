#pragma once

// Exact population estimands for component-structure DGPs: the true variance
// of the score sum, the kernel-adjusted comparison estimand, the conservative
// estimand, and the expected CHS plug-in, plus the analytic m-dependent
// examples. Every estimand has two routes: a direct O(n^2) double sum over
// the covariance kernel and a factorized path through cell/period/cluster
// aggregates; tests hold the two to 1e-10 of each other.

#include <cstddef>
#include <optional>
#include <vector>

#include "hetvar/estimators.hpp"
#include "hetvar/kernel.hpp"
#include "hetvar/numerics.hpp"
#include "hetvar/panel.hpp"

namespace hetvar {

/// Component DGP: Y_i = mu_i + alpha_{g(i)} + gamma_{t(i)} + eps_i per
/// coordinate, with alpha iid (0, sigma2_alpha), gamma a stationary AR(1)
/// with innovation variance sigma2_gamma_innov and coefficient rho, and eps
/// iid (0, sigma2_eps). Coordinates are independent (diagonal kernel).
/// The implied scalar covariance kernel per coordinate c is
///   Cov(Y_i, Y_j)[c] = sigma2_alpha 1{g(i)=g(j)}
///                    + sigma2_gamma_innov/(1-rho^2) rho^{|t(i)-t(j)|}
///                    + sigma2_eps 1{i=j}.
struct ComponentDgp {
  PanelIndex panel;
  std::size_t v = 1;
  std::vector<std::vector<double>> mu;  // n rows of length v; empty = all zero
  std::vector<double> sigma2_alpha;       // length v
  std::vector<double> sigma2_gamma_innov; // length v
  std::vector<double> rho;                // length v, each |rho| < 1
  std::vector<double> sigma2_eps;         // length v

  /// Scalar-coordinate convenience constructor.
  static ComponentDgp scalar(PanelIndex panel, std::vector<double> mu, double s2_alpha,
                             double s2_gamma_innov, double rho, double s2_eps);

  void validate() const;
  double mean(std::size_t i, std::size_t c) const {
    return mu.empty() ? 0.0 : mu[i][c];
  }
  double gamma_stationary_var(std::size_t c) const {
    return sigma2_gamma_innov[c] / (1.0 - rho[c] * rho[c]);
  }
};

/// Covariance kernel at a pair of observations (diagonal v x v).
SymMatrix population_cov(const ComponentDgp& d, std::size_t i, std::size_t j);

/// Var(sum_i Y_i) as the full double sum of the covariance kernel. Means do
/// not enter.
SymMatrix v_true(const ComponentDgp& d);
/// Same value through the factorized component route (self-oracle twin).
SymMatrix v_true_factorized(const ComponentDgp& d);

/// Kernel-adjusted comparison estimand: one-way cluster + one-way time
/// covariance sums, minus the cell-intersection sum, plus kernel-weighted
/// both-order lagged aggregate covariances. The within-cluster cross-lag
/// line is omitted (asymptotically negligible in the theory); its value is
/// available separately from omitted_within_cluster_lag_cov.
SymMatrix v_adj(const ComponentDgp& d, const KernelSpec& k);
SymMatrix v_adj_double_sum(const ComponentDgp& d, const KernelSpec& k);

/// The within-cluster cross-lag covariance term dropped from v_adj, summed
/// over all lags m >= 1 with both orders.
SymMatrix omitted_within_cluster_lag_cov(const ComponentDgp& d);

/// Conservative estimand: E-version of the heterogeneous-means display,
/// with E[Y_i Y_j'] = Cov(i,j) + mu_i mu_j'.
SymMatrix v_con_estimand(const ComponentDgp& d, const KernelSpec& k);
SymMatrix v_con_estimand_double_sum(const ComponentDgp& d, const KernelSpec& k);

/// Expected CHS plug-in under the DGP (full display, adjustment included).
SymMatrix v_chs_estimand(const ComponentDgp& d, const KernelSpec& k);
SymMatrix v_chs_estimand_double_sum(const ComponentDgp& d, const KernelSpec& k);

/// Mean-product pieces of the CHS-estimand-minus-true-variance bias for a
/// zero-covariance DGP, in the order the worked m=1 example reports them:
/// cluster, time, cell, one-order serial aggregate, one-order within-cluster
/// serial. The aggregate bias equals
/// cluster + time - cell + 2*serial - 2*within (kernel weights applied).
struct ChsBiasDecomposition {
  double cluster = 0.0;
  double time = 0.0;
  double cell = 0.0;
  double serial = 0.0;
  double within_cluster_serial = 0.0;
  double aggregate = 0.0;
};

ChsBiasDecomposition chs_bias_decomposition(const ComponentDgp& d, const KernelSpec& k);

/// The three-period m-dependent example: D1 = sum m_t^2 + 2 sum m_t m_{t+1};
/// D2 = 2 sum m_t^2 + 2 sum m_t m_{t+1} + sum Var(y_t) with unit variances.
struct Example1Gap {
  double d1 = 0.0;
  double d2 = 0.0;
};
Example1Gap example1_gap(const std::vector<double>& means);

struct EstimandReport {
  SymMatrix v_true;
  SymMatrix v_adj;
  SymMatrix v_con;
  SymMatrix v_chs;
  double lambda_n = 0.0;            // min eigenvalue of v_true
  double psd_gap_min_eig = 0.0;     // min eigenvalue of v_con - v_adj
  double chs_gap_min_eig = 0.0;     // min eigenvalue of v_chs - v_true
  bool v_true_singular = false;
  /// ||v_true^{-1} v_adj - I||_F when v_true is nonsingular.
  std::optional<double> ratio_distance;
};

EstimandReport psd_gap_report(const ComponentDgp& d, const KernelSpec& k);

}  // namespace hetvar
