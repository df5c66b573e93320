#pragma once

#include <cmath>
#include <numbers>

namespace fmhom {

namespace detail {

// Below this magnitude the power series (all terms positive, no cancellation)
// is used; above it the Hankel asymptotic expansion reaches its smallest term
// well under 1e-16 relative.
inline constexpr double kI0SeriesLimit = 20.0;

/// sum_{k>=1} (x^2/4)^k / (k!)^2, i.e. I0(x) - 1 without the leading 1.
inline double i0_series_tail(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 0.0;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k));
    sum += term;
    if (term <= sum * 1e-17) break;
  }
  return sum;
}

/// exp(-x) * I0(x) for x > kI0SeriesLimit.
inline double i0_scaled_asymptotic(double x) {
  // I0(x) ~ e^x / sqrt(2 pi x) * sum_k [(2k-1)!!]^2 / (k! (8x)^k)
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = term * odd * odd / (static_cast<double>(k) * 8.0 * x);
    if (next >= term) break;  // series started diverging
    term = next;
    sum += term;
    if (term <= sum * 1e-17) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

}  // namespace detail

/// Modified Bessel function of the first kind, order zero.
inline double bessel_i0(double x) {
  const double ax = std::abs(x);
  if (ax <= detail::kI0SeriesLimit) return 1.0 + detail::i0_series_tail(ax);
  return std::exp(ax) * detail::i0_scaled_asymptotic(ax);
}

/// I0(x) - 1, accurate for small |x| where I0(x) is close to one.
inline double bessel_i0m1(double x) {
  const double ax = std::abs(x);
  if (ax <= detail::kI0SeriesLimit) return detail::i0_series_tail(ax);
  return bessel_i0(ax) - 1.0;
}

}  // namespace fmhom
