#include "hetvar/kernel.hpp"

#include <random>
#include <stdexcept>

#include "doctest.h"

using namespace hetvar;

TEST_CASE("kernel weights") {
  const KernelSpec tri{KernelKind::Triangular, 3};
  CHECK(kernel_weight(tri, 1) == doctest::Approx(0.75));
  CHECK(kernel_weight(tri, 4) == 0.0);  // m = M+1
  const KernelSpec uni{KernelKind::Uniform, 1};
  CHECK(kernel_weight(uni, 1) == 1.0);
  CHECK(kernel_weight(uni, 2) == 0.0);
  CHECK_THROWS_AS(kernel_weight(tri, 0), std::invalid_argument);
}

TEST_CASE("weights are nonincreasing in the lag and bounded by one") {
  for (std::size_t M : {1, 2, 5, 17}) {
    for (auto kind : {KernelKind::Triangular, KernelKind::Uniform}) {
      const KernelSpec k{kind, M};
      double prev = 1.0;
      for (std::size_t m = 1; m <= M + 3; ++m) {
        const double w = kernel_weight(k, m);
        CHECK(w <= prev + 1e-15);
        CHECK(w >= 0.0);
        CHECK(w <= 1.0);
        prev = w;
      }
    }
  }
}

TEST_CASE("triangular weights sum to M/2 exactly") {
  for (std::size_t M = 0; M <= 40; ++M) {
    const KernelSpec k{KernelKind::Triangular, M};
    CHECK(kernel_weight_total(k) == doctest::Approx(M / 2.0).epsilon(1e-14));
  }
}

TEST_CASE("plug-in bandwidth closed form") {
  // rho = 0.5, T = 100: alpha(1) = 4*0.25/(0.25*2.25) = 16/9, and
  // ceil(1.1447 * (alpha*T)^(1/3)) = ceil(6.44) = 7.
  CHECK(andrews_bandwidth_from_rho({0.5}, 100) == 7);
  // white noise floors at 1
  CHECK(andrews_bandwidth_from_rho({0.0}, 100) == 1);
  // never exceeds T-1
  CHECK(andrews_bandwidth_from_rho({0.969}, 5) == 4);
  CHECK_THROWS_AS(andrews_bandwidth_from_rho({0.5}, 2), std::invalid_argument);
}

TEST_CASE("bandwidth selection end to end") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;

  // white noise: fitted rho is near zero, so the clamp floor applies
  std::vector<std::vector<double>> wn(200, std::vector<double>(1));
  for (auto& y : wn) y[0] = nd(rng);
  const auto r = andrews_bandwidth(wn, 200);
  CHECK_FALSE(r.zero_variance);
  CHECK(r.bandwidth >= 1);
  CHECK(r.bandwidth <= 2);

  // persistent series picks a larger M, consistent with its fitted rho
  std::vector<std::vector<double>> ar(400, std::vector<double>(1));
  double prev = 0.0;
  for (auto& y : ar) {
    prev = 0.8 * prev + nd(rng);
    y[0] = prev;
  }
  const auto r2 = andrews_bandwidth(ar, 400);
  CHECK(r2.bandwidth == andrews_bandwidth_from_rho(r2.rho_hat, 400));
  CHECK(r2.bandwidth > r.bandwidth);
  CHECK(r2.bandwidth <= 399);

  // scale invariance
  auto scaled = ar;
  for (auto& y : scaled) y[0] *= 1234.5;
  CHECK(andrews_bandwidth(scaled, 400).bandwidth == r2.bandwidth);

  // degenerate series flags and floors
  std::vector<std::vector<double>> flat(50, std::vector<double>{3.0});
  const auto r3 = andrews_bandwidth(flat, 50);
  CHECK(r3.zero_variance);
  CHECK(r3.bandwidth == 1);

  CHECK_THROWS_AS(andrews_bandwidth({{1.0}, {2.0}}, 2), std::invalid_argument);
}
