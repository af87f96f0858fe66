#pragma once

#include <cmath>
#include <cstdlib>

#include "rwdre/core/error.hpp"

namespace rwdre::expansion {

namespace detail {

// Large-argument expansion e^{-x} I_n(x) ~ (2 pi x)^{-1/2} sum_k (-1)^k a_k(n) / x^k,
// a_k = prod_{j<=k} (4n^2 - (2j-1)^2) / (k! 8^k). Used only when n^2 <= x/4,
// where successive terms shrink by at least a factor 8 at first.
inline double scaled_bessel_i_hankel(int n, double x) {
  const double mu = 4.0 * static_cast<double>(n) * static_cast<double>(n);
  double term = 1.0, sum = 1.0, prev = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= -(mu - odd * odd) / (8.0 * k * x);
    if (std::abs(term) > std::abs(prev)) break;  // asymptotic series turns around
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    prev = term;
  }
  return sum / std::sqrt(2.0 * M_PI * x);
}

// Power series sum_k (x/2)^{2k+n} / (k! (k+n)!) times e^{-x}. All terms are
// positive; the sum starts at the largest term and walks outwards, with the
// peak term formed in log space, so it neither overflows nor cancels.
inline double scaled_bessel_i_series(int n, double x) {
  const double half = 0.5 * x;
  const double half2 = half * half;
  const double nn = static_cast<double>(n);
  double kpeak = std::floor(0.5 * (std::sqrt(nn * nn + x * x) - nn));
  if (kpeak < 0.0) kpeak = 0.0;
  const double log_peak = (2.0 * kpeak + nn) * std::log(half) - std::lgamma(kpeak + 1.0) -
                          std::lgamma(kpeak + nn + 1.0) - x;
  if (log_peak < -745.0) return 0.0;
  double sum = 1.0;
  double term = 1.0;
  for (double k = kpeak; ; k += 1.0) {  // upward: t_{k+1}/t_k = half^2 / ((k+1)(k+n+1))
    term *= half2 / ((k + 1.0) * (k + nn + 1.0));
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  term = 1.0;
  for (double k = kpeak; k > 0.0; k -= 1.0) {  // downward: t_{k-1}/t_k = k (k+n) / half^2
    term *= k * (k + nn) / half2;
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return std::exp(log_peak) * sum;
}

}  // namespace detail

// e^{-x} I_n(x) for integer n and x >= 0.
inline double scaled_bessel_i(int n, double x) {
  if (x < 0.0) throw DomainError("scaled_bessel_i: x must be non-negative");
  n = std::abs(n);
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;
  const double nn = static_cast<double>(n);
  if (x >= 40.0 && nn * nn <= 0.25 * x) return detail::scaled_bessel_i_hankel(n, x);
  return detail::scaled_bessel_i_series(n, x);
}

// p_t(0, y) for continuous-time simple random walk with total jump rate 1.
inline double srw_kernel(double t, long long y) {
  if (t < 0.0) throw DomainError("srw_kernel: t must be non-negative");
  return scaled_bessel_i(static_cast<int>(std::llabs(y)), t);
}

// Spatial truncation |y| <= t + 40 sqrt(t) + 40 used for kernel sums.
inline long long srw_truncation(double t) {
  return static_cast<long long>(std::ceil(t + 40.0 * std::sqrt(t) + 40.0));
}

}  // namespace rwdre::expansion
