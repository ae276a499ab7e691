#include "hetvar/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hetvar/numerics.hpp"

namespace hetvar {

double kernel_weight(const KernelSpec& k, std::size_t m) {
  if (m < 1) throw std::invalid_argument("kernel_weight: lag m must be >= 1");
  if (m > k.bandwidth) return 0.0;
  switch (k.kind) {
    case KernelKind::Triangular:
      return std::max(0.0, 1.0 - static_cast<double>(m) / (static_cast<double>(k.bandwidth) + 1.0));
    case KernelKind::Uniform:
      return 1.0;
  }
  return 0.0;
}

double kernel_weight_total(const KernelSpec& k) {
  double s = 0.0;
  for (std::size_t m = 1; m <= k.bandwidth; ++m) s += kernel_weight(k, m);
  return s;
}

std::size_t andrews_bandwidth_from_rho(const std::vector<double>& rho, std::size_t T) {
  if (T < 3) throw std::invalid_argument("andrews_bandwidth: T must be >= 3");
  KahanSum acc;
  for (double r : rho) {
    const double om = (1.0 - r) * (1.0 - r);
    const double op = (1.0 + r) * (1.0 + r);
    acc.add(4.0 * r * r / (om * op));
  }
  const double alpha1 = rho.empty() ? 0.0 : acc.value() / static_cast<double>(rho.size());
  const double raw = 1.1447 * std::cbrt(alpha1 * static_cast<double>(T));
  std::size_t m = static_cast<std::size_t>(std::max(1.0, std::ceil(raw)));
  return std::min(m, T - 1);
}

BandwidthResult andrews_bandwidth(const std::vector<std::vector<double>>& series,
                                  std::size_t T) {
  if (T < 3 || series.size() != T)
    throw std::invalid_argument("andrews_bandwidth: need the full y_t sequence with T >= 3");
  const std::size_t v = series.empty() ? 0 : series[0].size();
  for (const auto& y : series)
    if (y.size() != v) throw std::invalid_argument("andrews_bandwidth: ragged series");

  BandwidthResult out;
  bool any_signal = false;
  for (std::size_t c = 0; c < v; ++c) {
    KahanSum mean;
    for (std::size_t t = 0; t < T; ++t) mean.add(series[t][c]);
    const double mu = mean.value() / static_cast<double>(T);

    KahanSum num, den;
    for (std::size_t t = 1; t < T; ++t) {
      const double prev = series[t - 1][c] - mu;
      num.add((series[t][c] - mu) * prev);
      den.add(prev * prev);
    }
    double r = 0.0;
    if (den.value() > 0.0) {
      r = num.value() / den.value();
      any_signal = true;
    }
    out.rho_hat.push_back(std::clamp(r, -0.97, 0.97));
  }
  out.zero_variance = !any_signal;
  out.bandwidth = andrews_bandwidth_from_rho(out.rho_hat, T);
  if (out.zero_variance) out.bandwidth = 1;
  return out;
}

}  // namespace hetvar
