#include "hetvar/oracle.hpp"

#include <random>

#include "doctest.h"

using namespace hetvar;

namespace {

PanelIndex balanced(std::size_t G, std::size_t T) {
  std::vector<PanelRecord> recs;
  for (std::int64_t g = 1; g <= static_cast<std::int64_t>(G); ++g)
    for (std::int64_t t = 1; t <= static_cast<std::int64_t>(T); ++t) recs.push_back({g, t});
  return PanelIndex::build(recs);
}

ComponentDgp random_dgp(std::mt19937_64& rng, bool with_means = true) {
  std::uniform_int_distribution<std::size_t> gd(2, 7), td(2, 9);
  std::uniform_int_distribution<std::int64_t> gl(1, 5), tl(1, 7);
  std::uniform_real_distribution<double> ud(0.0, 1.5), rd(-0.85, 0.85);
  std::normal_distribution<double> nd;
  // unbalanced panel with random labels
  const std::size_t n = 10 + rng() % 60;
  std::vector<PanelRecord> recs(n);
  for (auto& r : recs) r = {gl(rng), tl(rng)};
  std::vector<double> mu;
  if (with_means)
    for (std::size_t i = 0; i < n; ++i) mu.push_back(2.0 * nd(rng));
  return ComponentDgp::scalar(PanelIndex::build(recs), mu, ud(rng), ud(rng), rd(rng), ud(rng));
}

double rel_diff(const SymMatrix& a, const SymMatrix& b) {
  double scale = std::max({a.max_abs(), b.max_abs(), 1e-30});
  double worst = 0;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j)
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / scale);
  return worst;
}

}  // namespace

TEST_CASE("population covariance kernel") {
  const auto p = balanced(2, 3);
  // own variance with unit components
  const auto d1 = ComponentDgp::scalar(p, {}, 1, 1, 0, 1);
  CHECK(population_cov(d1, 0, 0)(0, 0) == doctest::Approx(3.0));

  // same cluster at lag 1 with only the AR component: rho/(1-rho^2)
  for (double rho : {0.3, 0.6, -0.4}) {
    const auto d2 = ComponentDgp::scalar(p, {}, 0, 1, rho, 0);
    CHECK(population_cov(d2, 0, 1)(0, 0) ==
          doctest::Approx(rho / (1 - rho * rho)).epsilon(1e-13));
  }

  // different clusters, same period: the shared time factor
  const auto d3 = ComponentDgp::scalar(p, {}, 0.7, 1, 0.5, 0.2);
  // obs 0 is (g1,t1); obs 3 is (g2,t1)
  CHECK(population_cov(d3, 0, 3)(0, 0) == doctest::Approx(1.0 / (1 - 0.25)).epsilon(1e-13));
}

TEST_CASE("v_true ignores the mean function and vanishes for a zero DGP") {
  std::mt19937_64 rng(5);
  const auto p = balanced(3, 4);
  std::normal_distribution<double> nd;
  std::vector<double> mu1(p.n()), mu2(p.n());
  for (auto& v : mu1) v = nd(rng);
  for (auto& v : mu2) v = nd(rng);
  const auto a = ComponentDgp::scalar(p, mu1, 0.8, 1.1, 0.4, 0.6);
  const auto b = ComponentDgp::scalar(p, mu2, 0.8, 1.1, 0.4, 0.6);
  CHECK(v_true(a)(0, 0) == v_true(b)(0, 0));  // exact: means never enter

  const auto zero = ComponentDgp::scalar(p, {}, 0, 0, 0, 0);
  CHECK(v_true(zero)(0, 0) == 0.0);
}

TEST_CASE("two-way component closed form at rho = 0") {
  // With unit variances, rho = 0, G = T and one observation per cell, the
  // variance of the total is sum_g |N_g|^2 + sum_t |N_t|^2 + n
  // = 2 T^3 + T^2. The one-way-robust estimand at M = 0 exceeds it by
  // sum_i Var(Y_i) = 3 T^2 exactly.
  for (std::size_t T = 2; T <= 10; ++T) {
    const auto d = ComponentDgp::scalar(balanced(T, T), {}, 1, 1, 0, 1);
    const double tt = static_cast<double>(T);
    const double vt = v_true(d)(0, 0);
    CHECK(vt == doctest::Approx(2 * tt * tt * tt + tt * tt).epsilon(1e-12));
    CHECK(v_true_factorized(d)(0, 0) == doctest::Approx(vt).epsilon(1e-12));

    const KernelSpec m0{KernelKind::Uniform, 0};
    const double cgm2 = v_con_estimand(d, m0)(0, 0);
    CHECK(cgm2 - vt == doctest::Approx(3 * tt * tt).epsilon(1e-12));
  }
}

TEST_CASE("factorized and double-sum estimand routes agree") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto d = random_dgp(rng);
    const std::size_t T = d.panel.num_periods();
    KernelSpec k{trial % 2 == 0 ? KernelKind::Triangular : KernelKind::Uniform,
                 T > 1 ? rng() % T : 0};
    CHECK(rel_diff(v_true(d), v_true_factorized(d)) < 1e-10);
    CHECK(rel_diff(v_adj(d, k), v_adj_double_sum(d, k)) < 1e-10);
    CHECK(rel_diff(v_con_estimand(d, k), v_con_estimand_double_sum(d, k)) < 1e-10);
    CHECK(rel_diff(v_chs_estimand(d, k), v_chs_estimand_double_sum(d, k)) < 1e-10);
  }
}

TEST_CASE("v_adj fixtures") {
  std::mt19937_64 rng(13);
  // rho = 0: no cross-period covariance anywhere, so truncation is exact
  for (int trial = 0; trial < 10; ++trial) {
    auto d = random_dgp(rng);
    d.rho = {0.0};
    const KernelSpec m0{KernelKind::Uniform, 0};
    CHECK(rel_diff(v_adj(d, m0), v_true(d)) < 1e-12);
  }

  // uniform kernel at full bandwidth: the only gap is the omitted
  // within-cluster cross-lag line
  const auto p = balanced(4, 6);
  const auto d = ComponentDgp::scalar(p, {}, 0.9, 1.0, 0.5, 0.3);
  const KernelSpec full{KernelKind::Uniform, 5};
  const SymMatrix gap = v_adj(d, full) - v_true(d);
  CHECK(rel_diff(gap, omitted_within_cluster_lag_cov(d)) < 1e-11);

  const auto zero = ComponentDgp::scalar(p, {}, 0, 0, 0, 0);
  CHECK(v_adj(zero, full)(0, 0) == 0.0);
}

TEST_CASE("v_con_estimand fixtures") {
  std::mt19937_64 rng(17);
  // zero means, M = 0: differs from v_adj by exactly the cell term
  for (int trial = 0; trial < 10; ++trial) {
    const auto d = random_dgp(rng, /*with_means=*/false);
    const KernelSpec m0{KernelKind::Uniform, 0};
    // cell covariance total = v_con - v_adj at M=0
    const double diff = v_con_estimand(d, m0)(0, 0) - v_adj(d, m0)(0, 0);
    // recompute the cell term directly
    KahanSum cell;
    for (const auto& [key, obs] : d.panel.cells())
      for (std::size_t i : obs)
        for (std::size_t j : obs) cell.add(population_cov(d, i, j)(0, 0));
    CHECK(diff == doctest::Approx(cell.value()).epsilon(1e-10));
  }

  // three-period singleton panel with the worked mean profile: the
  // conservative estimand dominates the true variance
  std::vector<PanelRecord> recs = {{1, 1}, {2, 2}, {3, 3}};
  const auto ts = ComponentDgp::scalar(PanelIndex::build(recs), {0.5, -1.0, 0.5}, 0, 0, 0, 1);
  const KernelSpec u1{KernelKind::Uniform, 1};
  CHECK(v_con_estimand(ts, u1)(0, 0) >= v_true(ts)(0, 0));

  const auto zero = ComponentDgp::scalar(balanced(2, 2), {}, 0, 0, 0, 0);
  CHECK(v_con_estimand(zero, u1)(0, 0) == 0.0);
}

TEST_CASE("expected CHS plug-in fixtures") {
  const KernelSpec u1{KernelKind::Uniform, 1};

  // The printed 2x4 mean fixture: all mass sits in the one-way time term,
  // which the cell subtraction removes exactly, so the bias is zero.
  std::vector<PanelRecord> recs;
  std::vector<double> mu;
  const double fixture[2][4] = {{-1, -1, 1, 1}, {1, -1, -1, 1}};
  for (std::int64_t g = 1; g <= 2; ++g)
    for (std::int64_t t = 1; t <= 4; ++t) {
      recs.push_back({g, t});
      mu.push_back(fixture[g - 1][t - 1]);
    }
  const auto panel = PanelIndex::build(recs);
  const auto fix = ComponentDgp::scalar(panel, mu, 0, 0, 0, 0);
  const auto dec = chs_bias_decomposition(fix, u1);
  CHECK(dec.cluster == doctest::Approx(0.0));
  CHECK(dec.time == doctest::Approx(8.0));
  CHECK(dec.cell == doctest::Approx(8.0));
  CHECK(dec.serial == doctest::Approx(0.0));
  CHECK(dec.within_cluster_serial == doctest::Approx(0.0));
  const double gap = v_chs_estimand(fix, u1)(0, 0) - v_true(fix)(0, 0);
  CHECK(gap == doctest::Approx(dec.aggregate).epsilon(1e-12));
  CHECK(gap == doctest::Approx(0.0));

  // Period-alternating means, constant across clusters, make the CHS
  // estimand strictly anticonservative: the gap is exactly -4.
  std::vector<double> alt;
  for (std::int64_t g = 1; g <= 2; ++g)
    for (std::int64_t t = 1; t <= 4; ++t) alt.push_back(t % 2 == 1 ? 1.0 : -1.0);
  const auto anti = ComponentDgp::scalar(panel, alt, 0, 0, 0, 0);
  const auto dec2 = chs_bias_decomposition(anti, u1);
  CHECK(dec2.cluster == doctest::Approx(0.0));
  CHECK(dec2.time == doctest::Approx(16.0));
  CHECK(dec2.cell == doctest::Approx(8.0));
  CHECK(dec2.serial == doctest::Approx(-12.0));
  CHECK(dec2.within_cluster_serial == doctest::Approx(-6.0));
  const double gap2 = v_chs_estimand(anti, u1)(0, 0) - v_true(anti)(0, 0);
  CHECK(gap2 == doctest::Approx(-4.0).epsilon(1e-13));
  CHECK(dec2.aggregate == doctest::Approx(-4.0).epsilon(1e-13));

  const auto zero = ComponentDgp::scalar(panel, {}, 0, 0, 0, 0);
  CHECK(v_chs_estimand(zero, u1)(0, 0) == 0.0);
}

TEST_CASE("three-period gap arithmetic") {
  const auto g1 = example1_gap({0.5, -1.0, 0.5});
  CHECK(g1.d1 == doctest::Approx(-0.5).epsilon(1e-15));

  const auto g0 = example1_gap({0, 0, 0});
  CHECK(g0.d1 == doctest::Approx(0.0));
  CHECK(g0.d2 == doctest::Approx(3.0));

  const auto gc = example1_gap({1, 1, 1});
  CHECK(gc.d1 == doctest::Approx(7.0));

  CHECK_THROWS_AS(example1_gap({1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("gap report: conservativeness and the ratio diagnostic") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 40; ++trial) {
    const auto d = random_dgp(rng);
    const std::size_t T = d.panel.num_periods();
    const KernelSpec k{trial % 2 == 0 ? KernelKind::Triangular : KernelKind::Uniform,
                       T > 1 ? rng() % T : 0};
    const auto r = psd_gap_report(d, k);
    CHECK(r.psd_gap_min_eig >= -1e-10 * std::max(1.0, r.v_con.spectral_norm()));
    CHECK(r.lambda_n == doctest::Approx(r.v_true(0, 0)));
  }

  // anticonservative fixture shows up in the chs gap
  std::vector<PanelRecord> recs;
  std::vector<double> alt;
  for (std::int64_t g = 1; g <= 2; ++g)
    for (std::int64_t t = 1; t <= 4; ++t) {
      recs.push_back({g, t});
      alt.push_back(t % 2 == 1 ? 1.0 : -1.0);
    }
  const auto anti = ComponentDgp::scalar(PanelIndex::build(recs), alt, 0, 0, 0, 0);
  const auto r = psd_gap_report(anti, KernelSpec{KernelKind::Uniform, 1});
  CHECK(r.v_true_singular);  // zero-covariance DGP
  CHECK(r.chs_gap_min_eig == doctest::Approx(-4.0).epsilon(1e-13));

  // shrinking truncation error: ratio diagnostic falls along growing panels
  double prev = 1e300;
  for (std::size_t T : {5, 10, 20, 40}) {
    const auto d = ComponentDgp::scalar(balanced(T, T), {}, 1, 1, 0.5, 1);
    const std::size_t M = static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(T))));
    const auto rep = psd_gap_report(d, KernelSpec{KernelKind::Uniform, M});
    REQUIRE(rep.ratio_distance.has_value());
    CHECK(*rep.ratio_distance < prev);
    prev = *rep.ratio_distance;
  }
  CHECK(prev < 0.15);
}
