#include "dmguard/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "dmguard/errors.hpp"

namespace dmguard::eval {

namespace {

void check_counts(std::int64_t k, std::int64_t n) {
  if (n < 1) throw ContractError(fmt::format("n must be >= 1, got {}", n));
  if (k < 0 || k > n) throw ContractError(fmt::format("k must be in 0..{}, got {}", n, k));
}

// Relative tolerance for "no more likely than", matching common reference
// implementations so near-ties in floating point count as ties.
constexpr double kTieTolerance = 1.0 + 1e-7;

/// Exact path for p0 = 1/2 and small n: C(n, i) fits in 64 bits.
double fair_coin_test(std::int64_t k, std::int64_t n) {
  std::vector<std::uint64_t> coeff(static_cast<std::size_t>(n) + 1, 1);
  for (std::int64_t i = 1; i <= n; ++i) {
    coeff[static_cast<std::size_t>(i)] =
        coeff[static_cast<std::size_t>(i - 1)] * static_cast<std::uint64_t>(n - i + 1) / static_cast<std::uint64_t>(i);
  }
  const auto at_k = coeff[static_cast<std::size_t>(k)];
  std::uint64_t sum = 0;
  for (const auto c : coeff) {
    if (c <= at_k) sum += c;
  }
  return std::min(1.0, std::ldexp(static_cast<double>(sum), static_cast<int>(-n)));
}

double log_pmf(std::int64_t i, std::int64_t n, double p) {
  const auto ni = static_cast<double>(n);
  const auto ii = static_cast<double>(i);
  double lp = std::lgamma(ni + 1) - std::lgamma(ii + 1) - std::lgamma(ni - ii + 1);
  if (i > 0) lp += ii * std::log(p);
  if (i < n) lp += (ni - ii) * std::log1p(-p);
  return lp;
}

}  // namespace

double z_for_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ContractError(fmt::format("confidence level must be in (0, 1), got {}", level));
  return boost::math::quantile(boost::math::normal(), 0.5 + level / 2.0);
}

double binomial_test(std::int64_t k, std::int64_t n, double p0) {
  check_counts(k, n);
  if (!(p0 >= 0.0 && p0 <= 1.0)) throw ContractError("p0 must be in [0, 1]");
  if (p0 == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p0 == 1.0) return k == n ? 1.0 : 0.0;
  if (p0 == 0.5 && n <= 62) return fair_coin_test(k, n);

  const double threshold = log_pmf(k, n, p0) + std::log(kTieTolerance);
  double p = 0.0;
  for (std::int64_t i = 0; i <= n; ++i) {
    const double lp = log_pmf(i, n, p0);
    if (lp <= threshold) p += std::exp(lp);
  }
  return std::min(1.0, p);
}

double normal_approx_test(std::int64_t k, std::int64_t n, double p0) {
  check_counts(k, n);
  if (!(p0 > 0.0 && p0 < 1.0)) throw ContractError("p0 must be in (0, 1)");
  const auto nn = static_cast<double>(n);
  const double z = (static_cast<double>(k) / nn - p0) / std::sqrt(p0 * (1.0 - p0) / nn);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal(), std::fabs(z))));
}

Interval wilson_ci(std::int64_t k, std::int64_t n, double level) {
  check_counts(k, n);
  const double z = z_for_level(level);
  const auto nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  Interval ci{std::max(0.0, centre - half), std::min(1.0, centre + half)};
  if (k == 0) ci.low = 0.0;
  if (k == n) ci.high = 1.0;
  return ci;
}

Interval wald_ci(std::int64_t k, std::int64_t n, double level) {
  check_counts(k, n);
  const double z = z_for_level(level);
  const auto nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double half = z * std::sqrt(p * (1.0 - p) / nn);
  return Interval{std::max(0.0, p - half), std::min(1.0, p + half)};
}

}  // namespace dmguard::eval
