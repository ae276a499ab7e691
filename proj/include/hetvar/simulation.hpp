#pragma once

// The linear-model Monte Carlo harness: balanced G x T panels with cluster,
// common-time AR(1), and idiosyncratic components, slope heterogeneity in
// an alternating +/- pattern, seeded replications, and rejection-rate
// reports. Replications are independent work units; output is bit-identical
// for a fixed master seed regardless of thread count.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hetvar/kernel.hpp"
#include "hetvar/oracle.hpp"
#include "hetvar/regression.hpp"
#include "hetvar/rng.hpp"

namespace hetvar {

enum class HetPattern { None, Checkerboard, TimeAlternating };

std::string het_pattern_name(HetPattern p);
std::optional<HetPattern> het_pattern_from_name(const std::string& s);

struct SimulationConfig {
  std::string label;
  std::size_t clusters = 50;
  std::size_t periods = 100;
  double rho = 0.25;
  double beta0 = 0.1;
  double beta1 = 0.1;
  double w_alpha = 0.15;
  double w_gamma = 0.20;
  double w_eps = 0.15;
  double het_amplitude = 0.1;
  HetPattern het_pattern = HetPattern::Checkerboard;
  std::size_t replications = 1000;
  std::uint64_t master_seed = 20260808;
  std::vector<Method> methods = {Method::EHW, Method::CRg, Method::CRt,
                                 Method::CGM,  Method::CHS, Method::HM};
  KernelKind kernel_kind = KernelKind::Triangular;
  bool bandwidth_auto = true;
  std::size_t bandwidth = 0;  // when not auto
  bool chs_drop_adjustment = false;
  double alpha_level = 0.05;

  void validate() const;
};

/// Stationary AR(1) path of length T: x_1 ~ N(0, sd^2/(1-rho^2)),
/// x_t = rho x_{t-1} + N(0, sd^2).
std::vector<double> ar1_path(std::size_t T, double rho, double innovation_sd,
                             RngStream& stream);

/// One replication's panel: balanced G x T design with intercept and a
/// single regressor, in cluster-major observation order.
Design simulate_panel(const SimulationConfig& c, std::size_t rep_index);

struct MethodResult {
  Method method;
  std::size_t rejections = 0;
  std::size_t failures = 0;  // estimator errors (negative variance), never rejections
  double rate = 0.0;         // rejections / replications
  double mc_se = 0.0;        // sqrt(rate (1-rate) / R)
  double mean_variance = 0.0;        // mean meat entry for the slope coordinate
  double mean_coef_variance = 0.0;   // mean sandwich variance of the slope
  double mean_bandwidth = 0.0;       // kernel methods only
};

struct RejectionReport {
  SimulationConfig config;
  std::size_t replications = 0;
  std::vector<MethodResult> methods;
  /// Var(sum_i X_i u_i) under the DGP at the null slope, from the closed-form
  /// Gaussian product kernel (slope coordinate).
  std::optional<double> oracle_score_variance;
};

/// Closed-form Var(sum_i X_i u_i) with u = Y - beta0 - beta1 X; the het term
/// enters through the Gaussian fourth-moment identity.
double oracle_score_sum_variance(const SimulationConfig& c);

RejectionReport run_monte_carlo(const SimulationConfig& c, std::size_t threads = 1);

/// Kolmogorov-Smirnov distance between the standardized component-DGP sums
/// S_n / sigma_n over R replications and the standard normal CDF; sigma_n is
/// the exact oracle value. Scalar DGPs.
double clt_check(const ComponentDgp& dgp, std::size_t R, std::uint64_t master_seed);

/// R draws of the component-DGP score sum (scalar coordinate), for empirical
/// variance cross-checks against v_true.
std::vector<double> simulate_component_sums(const ComponentDgp& dgp, std::size_t R,
                                            std::uint64_t master_seed);

/// KS distance of an arbitrary sample against N(0,1).
double ks_distance_standard_normal(std::vector<double> sample);

}  // namespace hetvar
