#include "hetvar/regression.hpp"

#include <algorithm>
#include <cmath>

namespace hetvar {

void Design::validate() const {
  if (y.size() != panel.n() || X.n() != panel.n())
    throw std::invalid_argument("Design: y/X/panel sizes disagree");
  if (panel.n() <= X.v()) throw std::invalid_argument("Design: need n > v");
  for (double v : y)
    if (!std::isfinite(v)) throw std::invalid_argument("Design: non-finite response");
  if (!X.all_finite()) throw std::invalid_argument("Design: non-finite regressor");
}

namespace {

bool is_balanced(const PanelIndex& p) {
  const std::size_t cells = p.num_clusters() * p.num_periods();
  if (p.cells().size() != cells) return false;
  const std::size_t c0 = p.cells().begin()->second.size();
  for (const auto& [key, obs] : p.cells())
    if (obs.size() != c0) return false;
  return true;
}

// One demeaning sweep along clusters or periods for a set of columns held
// as column-major vectors; returns the largest absolute change.
double demean_sweep(const PanelIndex& p, std::vector<std::vector<double>>& cols,
                    bool by_cluster) {
  double max_change = 0.0;
  const std::size_t nb = by_cluster ? p.num_clusters() : p.num_periods();
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& obs = by_cluster ? p.obs_in_cluster(b) : p.obs_in_period(b + 1);
    if (obs.empty()) continue;
    for (auto& col : cols) {
      KahanSum s;
      for (std::size_t i : obs) s.add(col[i]);
      const double mean = s.value() / static_cast<double>(obs.size());
      max_change = std::max(max_change, std::abs(mean));
      for (std::size_t i : obs) col[i] -= mean;
    }
  }
  return max_change;
}

}  // namespace

Design within_transform(const Design& d) {
  d.validate();
  const PanelIndex& p = d.panel;
  if (p.num_clusters() < 2 || p.num_periods() < 2)
    throw std::invalid_argument("within_transform: need >= 2 clusters and >= 2 periods");

  const std::size_t n = p.n();
  const std::size_t v = d.X.v();
  std::vector<std::vector<double>> cols(v + 1, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    cols[0][i] = d.y[i];
    for (std::size_t c = 0; c < v; ++c) cols[c + 1][i] = d.X(i, c);
  }

  if (is_balanced(p)) {
    for (auto& col : cols) {
      std::vector<double> gmean(p.num_clusters(), 0.0), tmean(p.num_periods(), 0.0);
      KahanSum total;
      for (std::size_t i = 0; i < n; ++i) total.add(col[i]);
      const double grand = total.value() / static_cast<double>(n);
      for (std::size_t g = 0; g < p.num_clusters(); ++g) {
        KahanSum s;
        for (std::size_t i : p.obs_in_cluster(g)) s.add(col[i]);
        gmean[g] = s.value() / static_cast<double>(p.cluster_size(g));
      }
      for (std::size_t t = 1; t <= p.num_periods(); ++t) {
        KahanSum s;
        for (std::size_t i : p.obs_in_period(t)) s.add(col[i]);
        tmean[t - 1] = s.value() / static_cast<double>(p.period_size(t));
      }
      for (std::size_t i = 0; i < n; ++i)
        col[i] -= gmean[p.cluster_of(i)] + tmean[p.time_of(i) - 1] - grand;
    }
  } else {
    double delta = 0.0;
    bool converged = false;
    for (int sweep = 0; sweep < 500; ++sweep) {
      delta = demean_sweep(p, cols, true);
      delta = std::max(delta, demean_sweep(p, cols, false));
      if (delta < 1e-10) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw std::runtime_error("within_transform: iterative demeaning did not converge (last delta " +
                               std::to_string(delta) + ")");
  }

  Design out;
  out.panel = d.panel;
  out.names = d.names;
  out.y = cols[0];
  out.X = ScoreMatrix(n, v);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < v; ++c) out.X(i, c) = cols[c + 1][i];
  return out;
}

FitResult ols_fit(const Design& d) {
  d.validate();
  const std::size_t n = d.X.n(), v = d.X.v();

  std::vector<KahanSum> xy(v), xx(v * v);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < v; ++a) {
      xy[a].add(d.X(i, a) * d.y[i]);
      for (std::size_t b = a; b < v; ++b) xx[a * v + b].add(d.X(i, a) * d.X(i, b));
    }
  }
  SymMatrix bread(v);
  for (std::size_t a = 0; a < v; ++a)
    for (std::size_t b = a; b < v; ++b) bread.set(a, b, xx[a * v + b].value());
  std::vector<double> rhs(v);
  for (std::size_t a = 0; a < v; ++a) rhs[a] = xy[a].value();

  FitResult fit;
  fit.bread = bread;
  fit.beta = solve_spd_vec(bread, rhs);  // throws with min eigenvalue if singular
  fit.residuals.resize(n);
  fit.scores = ScoreMatrix(n, v);
  for (std::size_t i = 0; i < n; ++i) {
    double pred = 0.0;
    for (std::size_t a = 0; a < v; ++a) pred += d.X(i, a) * fit.beta[a];
    fit.residuals[i] = d.y[i] - pred;
    for (std::size_t a = 0; a < v; ++a) fit.scores(i, a) = d.X(i, a) * fit.residuals[i];
  }
  return fit;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p in (0,1)");
  // Acklam's rational approximation, polished with one Halley step.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1);
  } else if (p <= phigh) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x = x - u / (1 + x * u / 2);
  return x;
}

double normal_critical_value(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("normal_critical_value: alpha in (0,1)");
  return normal_quantile(1.0 - alpha / 2.0);
}

InferenceResult sandwich(const PanelIndex& panel, const FitResult& fit, Method method,
                         const BandwidthPolicy& bw, bool chs_drop_adjustment,
                         const std::vector<std::string>& names) {
  const std::size_t v = fit.scores.v();

  KernelSpec kernel{bw.kind, 0};
  bool zero_var = false;
  const bool needs_kernel = (method == Method::CHS || method == Method::HM);
  if (needs_kernel) {
    const std::size_t T = panel.num_periods();
    if (bw.auto_select) {
      if (T >= 3) {
        const TimeAggregate ta = time_aggregate(panel, fit.scores);
        const BandwidthResult br = andrews_bandwidth(ta.y, T);
        kernel.bandwidth = br.bandwidth;
        zero_var = br.zero_variance;
      } else {
        kernel.bandwidth = T > 1 ? T - 1 : 0;
      }
    } else {
      kernel.bandwidth = bw.bandwidth;
    }
    kernel.bandwidth = std::min(kernel.bandwidth, T > 0 ? T - 1 : 0);
  }

  const VarianceEstimate meat = estimate(panel, fit.scores, method, kernel, chs_drop_adjustment);

  // bread^{-1} meat bread^{-1}
  std::vector<double> rhs(v * v);
  for (std::size_t i = 0; i < v; ++i)
    for (std::size_t j = 0; j < v; ++j) rhs[i * v + j] = meat.matrix(i, j);
  const auto half = solve_spd(fit.bread, rhs, v);  // bread^{-1} meat
  // (bread^{-1} meat) bread^{-1} = solve on the transpose; result symmetric.
  std::vector<double> half_t(v * v);
  for (std::size_t i = 0; i < v; ++i)
    for (std::size_t j = 0; j < v; ++j) half_t[i * v + j] = half[j * v + i];
  const auto full_t = solve_spd(fit.bread, half_t, v);
  SymMatrix var(v);
  for (std::size_t i = 0; i < v; ++i)
    for (std::size_t j = i; j < v; ++j)
      var.set(i, j, 0.5 * (full_t[j * v + i] + full_t[i * v + j]));

  InferenceResult out;
  out.method = method;
  out.kernel_used = needs_kernel ? kernel : KernelSpec{bw.kind, 0};
  out.bandwidth_was_auto = needs_kernel && bw.auto_select;
  out.bandwidth_zero_variance = zero_var;
  out.meat_min_eigenvalue = meat.min_eigenvalue;
  out.meat = meat.matrix;
  out.coef_variance = var;

  const double crit = 1.959964;  // 95% normal
  for (std::size_t j = 0; j < v; ++j) {
    const double vj = var(j, j);
    if (vj < 0.0) {
      const std::string nm = j < names.size() ? names[j] : ("x" + std::to_string(j));
      throw NegativeVarianceError("sandwich: negative variance for coefficient " + nm +
                                      " under " + method_name(method) +
                                      " (meat min eigenvalue " +
                                      std::to_string(meat.min_eigenvalue) + ")",
                                  j, meat.min_eigenvalue);
    }
    CoefficientInference ci;
    ci.name = j < names.size() ? names[j] : ("x" + std::to_string(j));
    ci.estimate = fit.beta[j];
    ci.se = std::sqrt(vj);  // zero for noiseless fits; t is then +/-inf
    ci.t = ci.estimate / ci.se;
    ci.p = std::erfc(std::abs(ci.t) / std::sqrt(2.0));
    ci.ci_lo = ci.estimate - crit * ci.se;
    ci.ci_hi = ci.estimate + crit * ci.se;
    out.coef.push_back(ci);
  }
  return out;
}

}  // namespace hetvar
