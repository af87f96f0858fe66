#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "rwdre/core/error.hpp"

namespace rwdre::stats {

// Welford accumulator.
class RunningStats {
 public:
  void add(double x) noexcept {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stddev() const noexcept { return std::sqrt(variance()); }
  double sem() const noexcept {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

inline MeanSe mean_se(std::span<const double> xs) {
  RunningStats s;
  for (double x : xs) s.add(x);
  return {s.mean(), s.sem(), s.count()};
}

// Standard normal upper tail.
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Kolmogorov limiting distribution: P(sqrt(n) D > lambda).
inline double kolmogorov_sf(double lambda) {
  if (lambda < 1e-3) return 1.0;
  if (lambda < 1.18) {
    // Small-lambda form converges faster here.
    const double pi2 = M_PI * M_PI;
    const double y = std::exp(-pi2 / (8.0 * lambda * lambda));
    double s = 0.0;
    for (int k = 1; k <= 9; k += 2) s += std::pow(y, k * k);
    return std::clamp(1.0 - std::sqrt(2.0 * M_PI) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;  // sup |F1 - F2|
  double p_value = 1.0;    // asymptotic; conservative for discrete laws
  std::size_t n = 0;
};

inline double ks_p_value(double d, double effective_n) {
  const double sn = std::sqrt(effective_n);
  return kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
}

// One-sample KS against a continuous CDF.
inline KsResult ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf) {
  if (xs.empty()) throw InsufficientData("ks_one_sample: empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, ks_p_value(d, n), xs.size()};
}

// One-sample KS against an integer-valued law given by its CDF on integers.
// Both step functions jump only at integers, so the sup is attained there.
inline KsResult ks_one_sample_discrete(std::vector<long long> xs,
                                       const std::function<double(long long)>& cdf) {
  if (xs.empty()) throw InsufficientData("ks_one_sample_discrete: empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < xs.size()) {
    const long long v = xs[i];
    // Between prev and v the empirical CDF is flat at i/n; the model CDF is
    // non-decreasing, so check its value just below v.
    d = std::max(d, std::abs(static_cast<double>(i) / n - cdf(v - 1)));
    while (i < xs.size() && xs[i] == v) ++i;
    d = std::max(d, std::abs(static_cast<double>(i) / n - cdf(v)));
  }
  return {d, ks_p_value(d, n), xs.size()};
}

// Two-sample KS; ties are handled by advancing through equal values together.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InsufficientData("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, ks_p_value(d, na * nb / (na + nb)), a.size() + b.size()};
}

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

inline Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.96) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_se = 0.0;
};

// Weighted least squares y = intercept + slope * x.
inline LinearFit weighted_linear_fit(std::span<const double> x, std::span<const double> y,
                                     std::span<const double> w) {
  if (x.size() != y.size() || x.size() != w.size() || x.size() < 2)
    throw InsufficientData("weighted_linear_fit: need at least two points");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0) throw InsufficientData("weighted_linear_fit: degenerate abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  // Weights are inverse variances, so the slope variance is 1/sxx.
  fit.slope_se = std::sqrt(1.0 / sxx);
  return fit;
}

// Batch-means estimate of the mean of a stationary sequence.
inline MeanSe batch_means(std::span<const double> xs, std::size_t batches) {
  if (batches < 2) throw InsufficientData("batch_means: need at least 2 batches");
  if (xs.size() < batches) throw InsufficientData("batch_means: fewer samples than batches");
  const std::size_t per = xs.size() / batches;
  RunningStats s;
  for (std::size_t b = 0; b < batches; ++b) {
    double acc = 0.0;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) acc += xs[i];
    s.add(acc / static_cast<double>(per));
  }
  return {s.mean(), s.sem(), batches};
}

}  // namespace rwdre::stats
