#include "hetvar/estimators.hpp"

#include <limits>
#include <random>

#include "doctest.h"

using namespace hetvar;

namespace {

// The worked 2x2 example: scores (1,2,3,4) on a balanced panel in
// cluster-major order.
struct Worked {
  PanelIndex panel = PanelIndex::build({{1, 1}, {1, 2}, {2, 1}, {2, 2}});
  ScoreMatrix scores = ScoreMatrix::from_scalars({1, 2, 3, 4});
};

PanelIndex random_panel(std::mt19937_64& rng, std::size_t n, std::int64_t G, std::int64_t T) {
  std::uniform_int_distribution<std::int64_t> gd(1, G), td(1, T);
  std::vector<PanelRecord> recs(n);
  for (auto& r : recs) r = {gd(rng), td(rng)};
  return PanelIndex::build(recs);
}

ScoreMatrix random_scores(std::mt19937_64& rng, std::size_t n, std::size_t v) {
  std::normal_distribution<double> nd;
  ScoreMatrix s(n, v);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < v; ++c) s(i, c) = nd(rng);
  return s;
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

TEST_CASE("time aggregation") {
  Worked w;
  const auto ta = time_aggregate(w.panel, w.scores);
  CHECK(ta.T == 2);
  CHECK(ta.y[0][0] == doctest::Approx(4.0));
  CHECK(ta.y[1][0] == doctest::Approx(6.0));

  const auto zeros = time_aggregate(w.panel, ScoreMatrix::from_scalars({0, 0, 0, 0}));
  CHECK(zeros.y[0][0] == 0.0);
  CHECK(zeros.y[1][0] == 0.0);

  const auto single = PanelIndex::build({{1, 1}, {2, 1}, {3, 1}});
  const auto ta1 = time_aggregate(single, ScoreMatrix::from_scalars({1, 2, 3}));
  CHECK(ta1.y[0][0] == doctest::Approx(6.0));

  // aggregate total equals the grand total
  std::mt19937_64 rng(2);
  const auto p = random_panel(rng, 200, 7, 9);
  const auto s = random_scores(rng, 200, 2);
  const auto agg = time_aggregate(p, s);
  for (std::size_t c = 0; c < 2; ++c) {
    KahanSum grand, bucket;
    for (std::size_t i = 0; i < s.n(); ++i) grand.add(s(i, c));
    for (const auto& y : agg.y) bucket.add(y[c]);
    CHECK(bucket.value() ==
          doctest::Approx(grand.value()).epsilon(1e-12 * static_cast<double>(s.n())));
  }
}

TEST_CASE("worked example values for every estimator") {
  Worked w;
  CHECK(ehw(w.panel, w.scores).matrix(0, 0) == doctest::Approx(30.0));
  CHECK(cr_one_way(w.panel, w.scores, OneWayDim::Cluster).matrix(0, 0) == doctest::Approx(58.0));
  CHECK(cr_one_way(w.panel, w.scores, OneWayDim::Time).matrix(0, 0) == doctest::Approx(52.0));
  CHECK(cgm(w.panel, w.scores).matrix(0, 0) == doctest::Approx(80.0));

  const KernelSpec tri1{KernelKind::Triangular, 1};
  CHECK(chs(w.panel, w.scores, tri1).matrix(0, 0) == doctest::Approx(90.0));
  CHECK(chs(w.panel, w.scores, tri1, true).matrix(0, 0) == doctest::Approx(104.0));
  CHECK(hm_con(w.panel, w.scores, tri1).matrix(0, 0) == doctest::Approx(186.0));

  const KernelSpec m0{KernelKind::Triangular, 0};
  CHECK(chs(w.panel, w.scores, m0).matrix(0, 0) == doctest::Approx(80.0));
  CHECK(hm_con(w.panel, w.scores, m0).matrix(0, 0) == doctest::Approx(110.0));

  CHECK(brute_force(w.panel, w.scores, Method::CGM, m0).matrix(0, 0) == doctest::Approx(80.0));
}

TEST_CASE("single observation and unit-vector fixtures") {
  const auto p = PanelIndex::build({{1, 1}});
  CHECK(ehw(p, ScoreMatrix::from_scalars({-3.0})).matrix(0, 0) == doctest::Approx(9.0));

  const auto p2 = PanelIndex::build({{1, 1}, {2, 2}});
  const auto s2 = ScoreMatrix::from_rows({{1, 0}, {0, 1}});
  const auto e = ehw(p2, s2);
  CHECK(e.matrix(0, 0) == doctest::Approx(1.0));
  CHECK(e.matrix(1, 1) == doctest::Approx(1.0));
  CHECK(e.matrix(0, 1) == doctest::Approx(0.0));

  // singleton buckets collapse the one-way estimator to EHW
  const auto p3 = PanelIndex::build({{1, 1}, {2, 2}, {3, 3}});
  const auto s3 = ScoreMatrix::from_scalars({1.5, -2.0, 0.25});
  CHECK(cr_one_way(p3, s3, OneWayDim::Cluster).matrix(0, 0) ==
        doctest::Approx(ehw(p3, s3).matrix(0, 0)));

  // degenerate partitions: single cluster and single period
  const auto p4 = PanelIndex::build({{1, 1}, {1, 1}, {1, 1}});
  const auto s4 = ScoreMatrix::from_scalars({1, 2, 3});
  CHECK(cgm(p4, s4).matrix(0, 0) == doctest::Approx(36.0));  // (1+2+3)^2
}

TEST_CASE("empty periods contribute zero vectors to the lag sums") {
  // periods 2 and 4 are empty; the kernel terms must skip them as zeros
  const auto p = PanelIndex::build({{1, 1}, {2, 1}, {1, 3}, {2, 3}, {1, 5}, {2, 5}});
  const auto s = ScoreMatrix::from_scalars({1, 2, 3, 4, 5, 6});
  const auto ta = time_aggregate(p, s);
  REQUIRE(ta.T == 5);
  CHECK(ta.y[1][0] == 0.0);
  CHECK(ta.y[3][0] == 0.0);
  // against the pair expansion, which never sees the empty periods
  const KernelSpec k{KernelKind::Uniform, 4};
  for (Method m : {Method::CHS, Method::HM}) {
    const auto fast = estimate(p, s, m, k);
    const auto ref = brute_force(p, s, m, k);
    CHECK(fast.matrix(0, 0) == doctest::Approx(ref.matrix(0, 0)).epsilon(1e-12));
  }
}

TEST_CASE("bandwidth guard") {
  Worked w;
  CHECK_THROWS_AS(chs(w.panel, w.scores, KernelSpec{KernelKind::Triangular, 2}),
                  std::invalid_argument);
  CHECK_THROWS_AS(hm_con(w.panel, w.scores, KernelSpec{KernelKind::Uniform, 5}),
                  std::invalid_argument);
}

TEST_CASE("estimators scale quadratically and ignore observation order") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t n = 60;
    auto p = random_panel(rng, n, 5, 7);
    auto s = random_scores(rng, n, 2);
    const KernelSpec k{trial % 2 == 0 ? KernelKind::Triangular : KernelKind::Uniform,
                       std::min<std::size_t>(3, p.num_periods() - 1)};
    const double c = 2.5;

    for (Method m : {Method::EHW, Method::CRg, Method::CRt, Method::CGM, Method::CHS,
                     Method::HM}) {
      const auto base = estimate(p, s, m, k);
      ScoreMatrix cs = s;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t col = 0; col < 2; ++col) cs(i, col) *= c;
      const auto scaled = estimate(p, cs, m, k);
      SymMatrix want = base.matrix;
      want *= c * c;
      CHECK(rel_diff(scaled.matrix, want) < 1e-12);
    }

    // permute observations together with their labels
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<PanelRecord> recs(n);
    ScoreMatrix ps(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t src = perm[i];
      recs[i] = {static_cast<std::int64_t>(p.cluster_of(src) + 1),
                 static_cast<std::int64_t>(p.time_of(src))};
      for (std::size_t col = 0; col < 2; ++col) ps(i, col) = s(src, col);
    }
    const auto pp = PanelIndex::build(recs);
    for (Method m : {Method::EHW, Method::CGM, Method::CHS, Method::HM}) {
      CHECK(rel_diff(estimate(p, s, m, k).matrix, estimate(pp, ps, m, k).matrix) < 1e-12);
    }
  }
}

TEST_CASE("conservative estimator is PSD in sample; one-way estimators are PSD") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 40 + trial % 20;
    const auto p = random_panel(rng, n, 4, 6);
    const auto s = random_scores(rng, n, 3);
    const KernelSpec k{trial % 2 == 0 ? KernelKind::Triangular : KernelKind::Uniform,
                       p.num_periods() - 1};
    const auto hm = hm_con(p, s, k);
    CHECK(hm.min_eigenvalue >= -1e-10 * std::max(1.0, hm.matrix.spectral_norm()));
    const auto cg = cr_one_way(p, s, OneWayDim::Cluster);
    const auto ct = cr_one_way(p, s, OneWayDim::Time);
    CHECK(cg.min_eigenvalue >= -1e-10 * std::max(1.0, cg.matrix.spectral_norm()));
    CHECK(ct.min_eigenvalue >= -1e-10 * std::max(1.0, ct.matrix.spectral_norm()));
  }
}

TEST_CASE("estimator linear relations at M = 0") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 80;
    const auto p = random_panel(rng, n, 6, 5);
    const auto s = random_scores(rng, n, 2);
    const KernelSpec m0{KernelKind::Triangular, 0};

    const auto chs0 = chs(p, s, m0);
    const auto cg = cgm(p, s);
    CHECK(rel_diff(chs0.matrix, cg.matrix) == 0.0);  // identical sums

    // hm(M=0) = cgm + cell-intersection term = CRg + CRt
    const auto hm0 = hm_con(p, s, m0);
    const auto want =
        cr_one_way(p, s, OneWayDim::Cluster).matrix + cr_one_way(p, s, OneWayDim::Time).matrix;
    CHECK(rel_diff(hm0.matrix, want) < 1e-14);
  }
}

TEST_CASE("fast estimators agree with the pair-expansion reference") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = 30 + static_cast<std::size_t>(rng() % 170);
    const auto p = random_panel(rng, n, 6, 9);
    const std::size_t v = 1 + trial % 3;
    const auto s = random_scores(rng, n, v);
    std::uniform_int_distribution<std::size_t> bw(0, p.num_periods() - 1);
    const KernelSpec k{trial % 2 == 0 ? KernelKind::Triangular : KernelKind::Uniform, bw(rng)};
    for (Method m : {Method::EHW, Method::CRg, Method::CRt, Method::CGM, Method::CHS,
                     Method::HM}) {
      CHECK(rel_diff(estimate(p, s, m, k).matrix, brute_force(p, s, m, k).matrix) < 1e-10);
    }
    CHECK(rel_diff(chs(p, s, k, true).matrix,
                   brute_force(p, s, Method::CHS, k, true).matrix) < 1e-10);
  }
}

TEST_CASE("non-finite scores are rejected") {
  const auto p = PanelIndex::build({{1, 1}, {2, 2}});
  ScoreMatrix s(2, 1);
  s(0, 0) = 1.0;
  s(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(ehw(p, s), std::invalid_argument);
  CHECK_THROWS_AS(hm_con(p, s, KernelSpec{KernelKind::Uniform, 1}), std::invalid_argument);
}

TEST_CASE("brute force size guard") {
  std::mt19937_64 rng(3);
  std::vector<PanelRecord> recs(10001, PanelRecord{1, 1});
  const auto p = PanelIndex::build(recs);
  ScoreMatrix s(10001, 1);
  CHECK_THROWS_AS(brute_force(p, s, Method::EHW, KernelSpec{}), std::invalid_argument);
}
