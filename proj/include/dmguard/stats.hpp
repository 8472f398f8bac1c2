#pragma once

#include <cstdint>

namespace dmguard::eval {

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Two-sided z quantile for a central confidence level, e.g. 1.959964 for 0.95.
[[nodiscard]] double z_for_level(double level);

/// Exact two-sided binomial test: the total probability under Binomial(n, p0)
/// of outcomes no more likely than k.
[[nodiscard]] double binomial_test(std::int64_t k, std::int64_t n, double p0 = 0.5);

/// Two-sided one-sample z test on a proportion (normal approximation).
[[nodiscard]] double normal_approx_test(std::int64_t k, std::int64_t n, double p0 = 0.5);

/// Wilson score interval.
[[nodiscard]] Interval wilson_ci(std::int64_t k, std::int64_t n, double level = 0.95);

/// Wald (normal approximation) interval, clipped to [0, 1].
[[nodiscard]] Interval wald_ci(std::int64_t k, std::int64_t n, double level = 0.95);

}  // namespace dmguard::eval
