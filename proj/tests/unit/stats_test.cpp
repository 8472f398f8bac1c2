#include <doctest.h>

#include <cmath>
#include <random>

#include "dmguard/stats.hpp"

using namespace dmguard::eval;

namespace {

// Two-sided exact p by summing the whole pmf; independent of the library's
// integer/log-space split.
double pmf_sum_oracle(int k, int n) {
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    pmf[static_cast<std::size_t>(i)] =
        std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) - n * std::log(2.0));
  }
  double p = 0.0;
  for (double x : pmf) {
    if (x <= pmf[static_cast<std::size_t>(k)] * (1 + 1e-7)) p += x;
  }
  return std::min(1.0, p);
}

}  // namespace

TEST_CASE("exact binomial values") {
  CHECK(binomial_test(5, 10) == 1.0);
  CHECK(binomial_test(6, 10) == 0.75390625);
  CHECK(binomial_test(10, 10) == 0.001953125);
  CHECK(binomial_test(16, 20) == 0.01181793212890625);
}

TEST_CASE("binomial test is symmetric at one half") {
  for (int n = 1; n <= 80; ++n) {
    for (int k = 0; k <= n; ++k) CHECK(binomial_test(k, n) == doctest::Approx(binomial_test(n - k, n)).epsilon(1e-12));
  }
}

TEST_CASE("binomial test agrees with full pmf summation") {
  for (int n : {1, 7, 20, 61, 62, 63, 100, 400}) {
    for (int k = 0; k <= n; k += std::max(1, n / 13)) {
      CHECK(binomial_test(k, n) == doctest::Approx(pmf_sum_oracle(k, n)).epsilon(1e-9));
    }
  }
}

TEST_CASE("binomial test with p0 other than one half") {
  // 1 success in 10 at p0 = 0.3: outcomes as or less likely than pmf(1) are 0, 1 and 5..10.
  double expect = 0.0;
  for (int i : {0, 1, 5, 6, 7, 8, 9, 10}) {
    expect += std::exp(std::lgamma(11.0) - std::lgamma(i + 1.0) - std::lgamma(11.0 - i) + i * std::log(0.3) +
                       (10 - i) * std::log(0.7));
  }
  CHECK(binomial_test(1, 10, 0.3) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("wilson boundaries") {
  for (int n : {1, 5, 40, 1000}) {
    CHECK(wilson_ci(0, n).low == 0.0);
    CHECK(wilson_ci(n, n).high == 1.0);
  }
}

TEST_CASE("wilson matches the textbook formula") {
  // Frozen from tests/oracles/derive.py with z = 1.959964.
  const auto ci = wilson_ci(644, 1200);
  CHECK(ci.low == doctest::Approx(0.5083809975633153).epsilon(1e-7));
  CHECK(ci.high == doctest::Approx(0.5647183290554709).epsilon(1e-7));
}

TEST_CASE("z quantile") {
  CHECK(z_for_level(0.95) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(z_for_level(0.99) == doctest::Approx(2.5758293035489).epsilon(1e-10));
}

TEST_CASE("wilson contains the point estimate and narrows with n") {
  for (int n = 1; n <= 400; ++n) {
    for (int k = 0; k <= n; k += std::max(1, n / 9)) {
      const auto ci = wilson_ci(k, n);
      const double p = static_cast<double>(k) / n;
      CHECK(ci.low <= p + 1e-15);
      CHECK(ci.high >= p - 1e-15);
    }
  }
  for (int step = 1; step < 100; ++step) {
    const auto a = wilson_ci(3 * step, 10 * step);
    const auto b = wilson_ci(3 * (step + 1), 10 * (step + 1));
    CHECK(b.high - b.low <= a.high - a.low + 1e-15);
  }
}

TEST_CASE("wald interval is clipped") {
  const auto ci = wald_ci(1, 2, 0.95);
  CHECK(ci.low >= 0.0);
  CHECK(ci.high <= 1.0);
  CHECK(wald_ci(0, 10).low == 0.0);
}

TEST_CASE("normal approximation is close to exact for large n") {
  CHECK(normal_approx_test(540, 1000) == doctest::Approx(binomial_test(540, 1000)).epsilon(0.05));
  CHECK(normal_approx_test(500, 1000) == doctest::Approx(1.0));
}
