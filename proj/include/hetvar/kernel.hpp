#pragma once

// Kernel weights w(m, M) and the Andrews AR(1) plug-in bandwidth rule.

#include <cstddef>
#include <vector>

namespace hetvar {

enum class KernelKind { Triangular, Uniform };

/// Kernel kind plus bandwidth M (max lag with nonzero weight). Both kinds
/// have weights in [0, 1], which the conservative estimator's PSD property
/// relies on.
struct KernelSpec {
  KernelKind kind = KernelKind::Triangular;
  std::size_t bandwidth = 0;
};

/// w(m, M) for lag m >= 1: triangular max(0, 1 - m/(M+1)); uniform
/// 1{m <= M}.
double kernel_weight(const KernelSpec& k, std::size_t m);

/// Sum_{m=1}^{M} w(m, M). Exactly M/2 for the triangular kernel.
double kernel_weight_total(const KernelSpec& k);

struct BandwidthResult {
  std::size_t bandwidth = 1;
  bool zero_variance = false;  // degenerate series; bandwidth forced to 1
  std::vector<double> rho_hat; // per-coordinate AR(1) fits (clamped)
};

/// Andrews (AR(1) plug-in, Bartlett constant) bandwidth from the
/// time-aggregated score sequence. series[t] is the v-dimensional y_{t+1};
/// T >= 3 required. Per coordinate, rho is the no-intercept OLS slope of the
/// demeaned y_t on y_{t-1}, clamped to [-0.97, 0.97]; the alpha(1) statistic
/// averages 4 rho^2 / ((1-rho)^2 (1+rho)^2) with equal coordinate weights,
/// and M = clamp(ceil(1.1447 (alpha(1) T)^{1/3}), 1, T-1).
BandwidthResult andrews_bandwidth(const std::vector<std::vector<double>>& series,
                                  std::size_t T);

/// The deterministic tail of the rule, exposed for direct checks of the
/// closed-form mapping rho -> M.
std::size_t andrews_bandwidth_from_rho(const std::vector<double>& rho, std::size_t T);

}  // namespace hetvar
