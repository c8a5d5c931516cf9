#include <doctest.h>

#include <boost/math/special_functions/beta.hpp>
#include <cmath>

#include "binomial_oracle.hpp"
#include "bellbench/error.hpp"
#include "bellbench/stats.hpp"

using namespace bell;

TEST_CASE("plug-in J") {
  CountTable c;
  c.add(0, 0, kPP, 1);
  c.add(0, 0, kOO, 9);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      if (i || j) c.add(i, j, kOO, 10);
  CHECK(j_estimate(c) == doctest::Approx(0.1).epsilon(1e-15));

  CountTable anti;  // "always +" local strategy
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) anti.add(i, j, kPP, 25);
  CHECK(j_estimate(anti) == 0.0);

  CountTable empty;
  empty.add(0, 0, kPP, 3);
  CHECK_THROWS_AS(j_estimate(empty), UndefinedEstimate);
}

TEST_CASE("win and loss channels") {
  CountTable c;
  c.add(0, 0, kPP, 5);
  c.add(0, 0, kP0, 100);
  c.add(0, 1, kP0, 2);
  c.add(1, 0, kOP, 3);
  c.add(1, 1, kPP, 4);
  c.add(1, 1, kOO, 50);
  const auto wl = win_loss(c);
  CHECK(wl.wins == 5);
  CHECK(wl.losses == 9);
}

TEST_CASE("tail equals exact rational arithmetic for small counts") {
  double worst = 0.0;
  for (double q : {0.5, adjusted_success_bound(2.4e-4), adjusted_success_bound(0.01), 0.6, 0.1, 0.9, 0.999}) {
    for (unsigned n = 0; n <= 30; ++n) {
      for (unsigned k = 0; k <= n; ++k) {
        const double exact = oracle::log_upper_tail(k, n, q);
        const double got = log_binomial_upper_tail(k, n, q);
        if (exact == 0.0) {
          CHECK(got == 0.0);
          continue;
        }
        const double rel = std::abs(got - exact) / std::abs(exact);
        worst = std::max(worst, rel);
        if (rel > 1e-12) FAIL_CHECK("k=" << k << " n=" << n << " q=" << q << " rel=" << rel);
      }
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("pmf against exact rational arithmetic") {
  for (double q : {0.5, 0.3, 0.77}) {
    for (unsigned n = 1; n <= 30; ++n) {
      for (unsigned k = 0; k <= n; ++k) {
        const auto t = oracle::upper_tail(k, n, q) - (k < n ? oracle::upper_tail(k + 1, n, q) : 0);
        const oracle::Float v =
            oracle::Float(boost::multiprecision::numerator(t)) / oracle::Float(boost::multiprecision::denominator(t));
        const double exact = static_cast<double>(log(v));
        CHECK(std::abs(log_binomial_pmf(k, n, q) - exact) <= 1e-12 * std::max(1.0, std::abs(exact)));
      }
    }
  }
}

TEST_CASE("tail for large n against the regularized incomplete beta") {
  for (double n : {1e3, 1e5, 1e7}) {
    for (double q : {0.5, 0.50048}) {
      for (double t : {-3.0, 0.0, 1.0, 3.0, 10.0, 30.0}) {
        const double k = std::floor(n * q + t * std::sqrt(n * q * (1 - q)));
        if (k > n) continue;
        const double ref = std::log(boost::math::ibeta(k, n - k + 1, q));
        if (!std::isfinite(ref)) continue;
        const double got = log_binomial_upper_tail(static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(n), q);
        CHECK(std::abs(got - ref) <= 1e-9 * std::max(1.0, std::abs(ref)));
      }
    }
  }
}

TEST_CASE("extreme tails stay finite in log space") {
  const double lp = log_binomial_upper_tail(600'000, 1'000'000, 0.5);
  CHECK(std::isfinite(lp));
  CHECK(lp < -8000.0);
  CHECK(log_binomial_upper_tail(1'000'000, 1'000'000, 0.5) == doctest::Approx(1e6 * std::log(0.5)).epsilon(1e-14));
  CHECK(log_binomial_upper_tail(0, 10, 0.3) == 0.0);
  CHECK(log_binomial_upper_tail(11, 10, 0.3) == -INFINITY);
}

TEST_CASE("p-value examples") {
  const auto two = pvalue(2, 0, 0.0);
  CHECK(two.log10_p == doctest::Approx(std::log10(0.25)).epsilon(1e-15));
  CHECK(two.q == 0.5);
  for (double eps : {0.0, 1e-4, 0.01, 0.2}) {
    for (std::uint64_t k : {0, 1, 5, 100, 5000}) {
      CHECK(pvalue(k, k, eps).log10_p >= std::log10(0.5));
    }
  }
  CHECK(pvalue(0, 0, 0.1).log10_p == 0.0);
  CHECK(pvalue(10, 3, 0.25).log10_p == 0.0);  // q = 1
  CHECK_THROWS_AS(pvalue(1, 1, -0.1), InvalidParameter);
  CHECK_THROWS_AS(pvalue(1, 1, 0.5), InvalidParameter);
}

TEST_CASE("p-value monotonicity") {
  for (std::uint64_t L : {0, 3, 40, 1000}) {
    double prev = 1.0;
    for (std::uint64_t K = 0; K < 1200; K += 7) {
      const double lp = pvalue(K, L, 2.4e-4).log10_p;
      CHECK(lp <= prev + 1e-15);
      prev = lp;
    }
  }
  for (std::uint64_t K : {10, 600, 5300}) {
    double prev = -INFINITY;
    for (double eps = 0.0; eps < 0.2; eps += 0.01) {
      const double lp = pvalue(K, 4700, eps).log10_p;
      CHECK(lp >= prev - 1e-15);
      prev = lp;
    }
  }
}

TEST_CASE("Azuma bound is never sharper than the binomial tail") {
  for (std::uint64_t n : {10, 100, 10000, 1000000}) {
    for (double frac : {0.3, 0.5, 0.51, 0.55, 0.7, 1.0}) {
      const auto K = static_cast<std::uint64_t>(frac * n);
      for (double eps : {0.0, 2.4e-4, 0.05}) {
        const auto b = pvalue(K, n - K, eps, PValueMethod::binomial_supermartingale);
        const auto a = pvalue(K, n - K, eps, PValueMethod::azuma);
        CHECK(a.log10_p >= b.log10_p - 1e-12);
        CHECK(a.log10_p <= 0.0);
      }
    }
  }
}

TEST_CASE("sigma equivalent") {
  CHECK(sigma_equivalent(0.5) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(std::abs(sigma_equivalent(0.158655) - 1.0) <= 0.001);
  CHECK(std::abs(sigma_equivalent(0.158655) - 1.000001) <= 1e-5);
  CHECK(std::abs(sigma_equivalent(3.74e-31) - 11.5) <= 0.1);
  CHECK(std::abs(sigma_equivalent(3.74e-31) - 11.5489) <= 1e-3);
  CHECK(sigma_equivalent(1.0) == -INFINITY);
  CHECK(sigma_equivalent(0.841345) == doctest::Approx(-1.0).epsilon(1e-5));
  CHECK_THROWS_AS(sigma_equivalent(0.0), InvalidParameter);
  CHECK_THROWS_AS(sigma_equivalent(1.5), InvalidParameter);

  for (double lp : {-0.1, -1.0, -5.0, -30.4, -300.0, -310.0, -1e3, -1e5}) {
    const double z = sigma_equivalent_log10(lp);
    CHECK(log_normal_upper_tail(z) / std::log(10.0) == doctest::Approx(lp).epsilon(1e-12));
  }
  double prev = -INFINITY;
  for (double lp = -0.01; lp > -500; lp *= 1.3) {
    const double z = sigma_equivalent_log10(lp);
    CHECK(z > prev);
    prev = z;
  }
}

TEST_CASE("normal tail matches erfc and its asymptotic form") {
  for (double z : {-5.0, -1.0, 0.0, 1.0, 5.0, 20.0, 24.9}) {
    CHECK(log_normal_upper_tail(z) == doctest::Approx(std::log(0.5 * std::erfc(z / std::sqrt(2.0)))).epsilon(1e-13));
  }
  // continuity across the switch to the continued fraction
  const double a = log_normal_upper_tail(24.999999), b = log_normal_upper_tail(25.0);
  CHECK(std::abs(a - b) < 1e-4);
  CHECK(b == doctest::Approx(std::log(0.5 * std::erfc(25.0 / std::sqrt(2.0)))).epsilon(1e-13));
}
