// Copyright (c) 2026 gffwalk contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "gffwalk/rng.hpp"

namespace gffwalk {

inline double normal_pdf(double x, double sigma = 1.0) {
  const double z = x / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Upper tail P(N(0,1) > x); erfc keeps precision far in the tail.
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

inline double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

// Unbiased sample variance.
inline double variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double stddev(std::span<const double> xs) { return std::sqrt(variance(xs)); }

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double half_width() const { return 0.5 * (hi - lo); }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                double z = 1.959963984540054) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double hw = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {std::max(0.0, centre - hw), std::min(1.0, centre + hw)};
}

// Normal-approximation CI for a sample mean.
inline Interval mean_ci(std::span<const double> xs, double z = 1.959963984540054) {
  const double m = mean(xs);
  if (xs.size() < 2) return {m, m};
  const double se = stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
  return {m - z * se, m + z * se};
}

// Batch-means CI for the mean of a dependent sequence: split into `n_batches`
// consecutive batches and treat batch means as independent.
inline Interval batch_means_ci(std::span<const double> xs, int n_batches = 30,
                               double z = 1.959963984540054) {
  if (xs.size() < static_cast<std::size_t>(2 * n_batches))
    return mean_ci(xs, z);
  const std::size_t b = xs.size() / static_cast<std::size_t>(n_batches);
  std::vector<double> bm;
  bm.reserve(static_cast<std::size_t>(n_batches));
  for (int i = 0; i < n_batches; ++i)
    bm.push_back(mean(xs.subspan(static_cast<std::size_t>(i) * b, b)));
  const double m = mean(xs);
  const double se = stddev(bm) / std::sqrt(static_cast<double>(n_batches));
  return {m - z * se, m + z * se};
}

// Ratio estimator sum(num)/sum(den) with a batch-means CI on per-batch ratios.
struct RatioEstimate {
  double value = 0.0;
  Interval ci;
};

inline RatioEstimate batch_means_ratio(std::span<const double> num,
                                       std::span<const double> den,
                                       int n_batches = 30,
                                       double z = 1.959963984540054) {
  if (num.size() != den.size() || num.empty())
    throw std::invalid_argument("batch_means_ratio: mismatched inputs");
  double sn = 0.0, sd = 0.0;
  for (std::size_t i = 0; i < num.size(); ++i) {
    sn += num[i];
    sd += den[i];
  }
  RatioEstimate out;
  out.value = sn / sd;
  if (num.size() < static_cast<std::size_t>(2 * n_batches)) {
    out.ci = {out.value, out.value};
    return out;
  }
  const std::size_t b = num.size() / static_cast<std::size_t>(n_batches);
  std::vector<double> rb;
  for (int i = 0; i < n_batches; ++i) {
    double n = 0.0, d = 0.0;
    for (std::size_t j = static_cast<std::size_t>(i) * b; j < (static_cast<std::size_t>(i) + 1) * b; ++j) {
      n += num[j];
      d += den[j];
    }
    rb.push_back(n / d);
  }
  const double se = stddev(rb) / std::sqrt(static_cast<double>(n_batches));
  out.ci = {out.value - z * se, out.value + z * se};
  return out;
}

// One-sample Kolmogorov-Smirnov statistic against the standard normal.
inline double ks_statistic_normal(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double cdf = normal_cdf(xs[i]);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(cdf - lo, hi - cdf));
  }
  return d;
}

inline void studentize(std::vector<double>& xs) {
  const double m = mean(xs);
  const double s = stddev(xs);
  for (double& x : xs) x = (s > 0.0) ? (x - m) / s : 0.0;
}

// Monte Carlo critical value for the KS statistic when mean and variance are
// estimated from the sample (Lilliefors-type calibration). Plugging estimated
// parameters into the textbook KS table would be anti-conservative.
inline double ks_critical_studentized(std::size_t n, double alpha = 0.05,
                                      int n_calib = 2000,
                                      std::uint64_t seed = 0x6b7363616c6962ull) {
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(n_calib));
  for (int b = 0; b < n_calib; ++b) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    std::vector<double> xs(n);
    for (double& x : xs) x = rng.next_normal();
    studentize(xs);
    stats.push_back(ks_statistic_normal(std::move(xs)));
  }
  std::sort(stats.begin(), stats.end());
  const std::size_t idx = static_cast<std::size_t>(
      std::ceil((1.0 - alpha) * static_cast<double>(n_calib + 1))) - 1;
  return stats[std::min(idx, stats.size() - 1)];
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

inline SlopeFit ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("ols_slope: need >= 2 matched points");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      ss += r * r;
    }
    f.slope_se = std::sqrt(ss / static_cast<double>(x.size() - 2) / sxx);
  }
  return f;
}

// Quantile of an unsorted sample (linear interpolation between order stats).
inline double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = p * static_cast<double>(xs.size() - 1);
  const std::size_t i = static_cast<std::size_t>(pos);
  if (i + 1 >= xs.size()) return xs.back();
  const double frac = pos - static_cast<double>(i);
  return xs[i] * (1.0 - frac) + xs[i + 1] * frac;
}

}  // namespace gffwalk
