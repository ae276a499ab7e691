#include "hetvar/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace hetvar {

namespace {

// Stream tags for the latent components of one replication.
enum Tag : std::uint64_t {
  kAlphaX = 1,
  kAlphaU = 2,
  kGammaX = 3,
  kGammaU = 4,
  kEpsX = 5,
  kEpsU = 6,
  kComponentAlpha = 11,
  kComponentGamma = 12,
  kComponentEps = 13,
};

double het_sign(HetPattern p, std::size_t g, std::size_t t) {
  switch (p) {
    case HetPattern::None: return 0.0;
    case HetPattern::Checkerboard: return ((g + t) % 2 == 0) ? 1.0 : -1.0;
    case HetPattern::TimeAlternating: return (t % 2 == 0) ? 1.0 : -1.0;
  }
  return 0.0;
}

}  // namespace

std::string het_pattern_name(HetPattern p) {
  switch (p) {
    case HetPattern::None: return "none";
    case HetPattern::Checkerboard: return "checkerboard";
    case HetPattern::TimeAlternating: return "time-alternating";
  }
  return "?";
}

std::optional<HetPattern> het_pattern_from_name(const std::string& s) {
  if (s == "none") return HetPattern::None;
  if (s == "checkerboard") return HetPattern::Checkerboard;
  if (s == "time-alternating" || s == "time_alternating") return HetPattern::TimeAlternating;
  return std::nullopt;
}

void SimulationConfig::validate() const {
  if (clusters < 1 || periods < 1) throw std::invalid_argument("config: empty panel");
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("config: |rho| must be < 1");
  if (replications < 1) throw std::invalid_argument("config: need R >= 1");
  if (!(alpha_level > 0.0 && alpha_level < 1.0))
    throw std::invalid_argument("config: alpha_level in (0,1)");
  if (!std::isfinite(w_alpha) || !std::isfinite(w_gamma) || !std::isfinite(w_eps) ||
      !std::isfinite(beta0) || !std::isfinite(beta1) || !std::isfinite(het_amplitude))
    throw std::invalid_argument("config: non-finite parameter");
  if (methods.empty()) throw std::invalid_argument("config: no methods requested");
  if (!bandwidth_auto && periods > 0 && bandwidth >= periods)
    throw std::invalid_argument("config: fixed bandwidth must be <= T-1");
}

std::vector<double> ar1_path(std::size_t T, double rho, double innovation_sd,
                             RngStream& stream) {
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("ar1_path: |rho| must be < 1");
  std::vector<double> x(T);
  if (T == 0) return x;
  x[0] = stream.next_normal() * innovation_sd / std::sqrt(1.0 - rho * rho);
  for (std::size_t t = 1; t < T; ++t)
    x[t] = rho * x[t - 1] + innovation_sd * stream.next_normal();
  return x;
}

Design simulate_panel(const SimulationConfig& c, std::size_t rep_index) {
  c.validate();
  const std::size_t G = c.clusters, T = c.periods, n = G * T;

  RngStream ax(c.master_seed, rep_index, kAlphaX);
  RngStream au(c.master_seed, rep_index, kAlphaU);
  RngStream gx(c.master_seed, rep_index, kGammaX);
  RngStream gu(c.master_seed, rep_index, kGammaU);
  RngStream ex(c.master_seed, rep_index, kEpsX);
  RngStream eu(c.master_seed, rep_index, kEpsU);

  std::vector<double> alpha_x(G), alpha_u(G);
  for (std::size_t g = 0; g < G; ++g) {
    alpha_x[g] = ax.next_normal();
    alpha_u[g] = au.next_normal();
  }
  const std::vector<double> gamma_x = ar1_path(T, c.rho, 1.0, gx);
  const std::vector<double> gamma_u = ar1_path(T, c.rho, 1.0, gu);

  Design d;
  d.names = {"const", "x"};
  std::vector<PanelRecord> records(n);
  d.y.resize(n);
  d.X = ScoreMatrix(n, 2);
  std::size_t i = 0;
  for (std::size_t g = 1; g <= G; ++g) {
    for (std::size_t t = 1; t <= T; ++t, ++i) {
      records[i] = {static_cast<std::int64_t>(g), static_cast<std::int64_t>(t)};
      const double x = c.w_alpha * alpha_x[g - 1] + c.w_gamma * gamma_x[t - 1] +
                       c.w_eps * ex.next_normal();
      const double u = c.w_alpha * alpha_u[g - 1] + c.w_gamma * gamma_u[t - 1] +
                       c.w_eps * eu.next_normal();
      const double bh = c.het_amplitude * het_sign(c.het_pattern, g, t);
      d.X(i, 0) = 1.0;
      d.X(i, 1) = x;
      d.y[i] = c.beta0 + (c.beta1 + bh) * x + u;
    }
  }
  d.panel = PanelIndex::build(records);
  return d;
}

double oracle_score_sum_variance(const SimulationConfig& c) {
  c.validate();
  const std::size_t G = c.clusters, T = c.periods, n = G * T;
  const double s_gamma = 1.0 / (1.0 - c.rho * c.rho);
  const double wa2 = c.w_alpha * c.w_alpha;
  const double wg2 = c.w_gamma * c.w_gamma;
  const double we2 = c.w_eps * c.w_eps;

  // X and U share the component kernel
  //   K(i,j) = wa2 1{g=g} + wg2 s_gamma rho^{|dt|} + we2 1{i=j}.
  // With s_i = X_i U_i + bh_i X_i^2, Gaussian moments give
  //   Cov(s_i, s_j) = K_ij^2 + 2 bh_i bh_j K_ij^2.
  std::vector<double> rpow(T);
  for (std::size_t m = 0; m < T; ++m) rpow[m] = std::pow(c.rho, static_cast<double>(m));

  KahanSum acc;
  for (std::size_t gi = 1; gi <= G; ++gi)
    for (std::size_t ti = 1; ti <= T; ++ti)
      for (std::size_t gj = 1; gj <= G; ++gj)
        for (std::size_t tj = 1; tj <= T; ++tj) {
          const std::size_t lag = ti > tj ? ti - tj : tj - ti;
          double k = wg2 * s_gamma * rpow[lag];
          if (gi == gj) k += wa2;
          if (gi == gj && ti == tj) k += we2;
          const double bh =
              c.het_amplitude * c.het_amplitude *
              het_sign(c.het_pattern, gi, ti) * het_sign(c.het_pattern, gj, tj);
          acc.add(k * k * (1.0 + 2.0 * bh));
        }
  (void)n;
  return acc.value();
}

RejectionReport run_monte_carlo(const SimulationConfig& c, std::size_t threads) {
  c.validate();
  const std::size_t R = c.replications;
  const std::size_t nm = c.methods.size();
  const double crit = normal_critical_value(c.alpha_level);
  const BandwidthPolicy bw = c.bandwidth_auto
                                 ? BandwidthPolicy::automatic(c.kernel_kind)
                                 : BandwidthPolicy::fixed(c.bandwidth, c.kernel_kind);

  struct RepOutcome {
    std::vector<std::uint8_t> rejected;  // per method: 0/1, 2 = failed
    std::vector<double> meat_var;        // slope-coordinate meat entry
    std::vector<double> coef_var;        // sandwich variance of the slope
    std::vector<double> bandwidth;
  };
  std::vector<RepOutcome> outcomes(R);

  auto run_rep = [&](std::size_t r) {
    RepOutcome& out = outcomes[r];
    out.rejected.assign(nm, 0);
    out.meat_var.assign(nm, 0.0);
    out.coef_var.assign(nm, 0.0);
    out.bandwidth.assign(nm, 0.0);
    const Design d = simulate_panel(c, r);
    const FitResult fit = ols_fit(d);
    for (std::size_t m = 0; m < nm; ++m) {
      try {
        const InferenceResult inf =
            sandwich(d.panel, fit, c.methods[m], bw, c.chs_drop_adjustment, d.names);
        const auto& slope = inf.coef.at(1);
        const double t = (slope.estimate - c.beta1) / slope.se;
        out.rejected[m] = std::abs(t) > crit ? 1 : 0;
        out.meat_var[m] = inf.meat(1, 1);
        out.coef_var[m] = inf.coef_variance(1, 1);
        out.bandwidth[m] = static_cast<double>(inf.kernel_used.bandwidth);
      } catch (const NegativeVarianceError&) {
        out.rejected[m] = 2;
      }
    }
  };

  if (threads <= 1) {
    for (std::size_t r = 0; r < R; ++r) run_rep(r);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const std::size_t r = next.fetch_add(1);
        if (r >= R) return;
        run_rep(r);
      }
    };
    std::vector<std::thread> pool;
    const std::size_t nw = std::min<std::size_t>(threads, R);
    pool.reserve(nw);
    for (std::size_t w = 0; w < nw; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Reduce in replication order so floating summaries are thread-count
  // independent.
  RejectionReport rep;
  rep.config = c;
  rep.replications = R;
  for (std::size_t m = 0; m < nm; ++m) {
    MethodResult mr;
    mr.method = c.methods[m];
    KahanSum meat_sum, coef_sum, bw_sum;
    std::size_t ok = 0;
    for (std::size_t r = 0; r < R; ++r) {
      const auto& o = outcomes[r];
      if (o.rejected[m] == 2) {
        ++mr.failures;
        continue;
      }
      ++ok;
      mr.rejections += o.rejected[m];
      meat_sum.add(o.meat_var[m]);
      coef_sum.add(o.coef_var[m]);
      bw_sum.add(o.bandwidth[m]);
    }
    const double denom = static_cast<double>(R);
    mr.rate = static_cast<double>(mr.rejections) / denom;
    mr.mc_se = std::sqrt(mr.rate * (1.0 - mr.rate) / denom);
    if (ok > 0) {
      mr.mean_variance = meat_sum.value() / static_cast<double>(ok);
      mr.mean_coef_variance = coef_sum.value() / static_cast<double>(ok);
      mr.mean_bandwidth = bw_sum.value() / static_cast<double>(ok);
    }
    rep.methods.push_back(mr);
  }
  rep.oracle_score_variance = oracle_score_sum_variance(c);
  return rep;
}

std::vector<double> simulate_component_sums(const ComponentDgp& dgp, std::size_t R,
                                            std::uint64_t master_seed) {
  dgp.validate();
  if (dgp.v != 1)
    throw std::invalid_argument("simulate_component_sums: scalar DGPs only");
  const PanelIndex& p = dgp.panel;
  const std::size_t G = p.num_clusters(), T = p.num_periods();
  const double sd_alpha = std::sqrt(dgp.sigma2_alpha[0]);
  const double sd_innov = std::sqrt(dgp.sigma2_gamma_innov[0]);
  const double sd_eps = std::sqrt(dgp.sigma2_eps[0]);

  std::vector<double> sums(R);
  for (std::size_t r = 0; r < R; ++r) {
    RngStream sa(master_seed, r, kComponentAlpha);
    RngStream sg(master_seed, r, kComponentGamma);
    RngStream se(master_seed, r, kComponentEps);
    const std::vector<double> gamma = ar1_path(T, dgp.rho[0], sd_innov, sg);
    KahanSum s;
    for (std::size_t g = 0; g < G; ++g)
      s.add(static_cast<double>(p.cluster_size(g)) * sd_alpha * sa.next_normal());
    for (std::size_t t = 1; t <= T; ++t)
      s.add(static_cast<double>(p.period_size(t)) * gamma[t - 1]);
    for (std::size_t i = 0; i < p.n(); ++i) s.add(sd_eps * se.next_normal());
    sums[r] = s.value();
  }
  return sums;
}

double ks_distance_standard_normal(std::vector<double> sample) {
  if (sample.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = normal_cdf(sample[i]);
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
  }
  return d;
}

double clt_check(const ComponentDgp& dgp, std::size_t R, std::uint64_t master_seed) {
  const SymMatrix vt = v_true_factorized(dgp);
  const double sigma = std::sqrt(vt(0, 0));
  if (!(sigma > 0.0)) throw std::invalid_argument("clt_check: degenerate DGP");
  std::vector<double> sums = simulate_component_sums(dgp, R, master_seed);
  for (double& s : sums) s /= sigma;
  return ks_distance_standard_normal(sums);
}

}  // namespace hetvar
