// Copyright (c) 2026 gffwalk contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "gffwalk/stats.hpp"
#include "gffwalk/walk.hpp"

namespace gffwalk {

// Everything in this module is a deterministic function of its input records;
// no hidden randomness. Inputs are per-replica summaries or renewal-interval
// sequences produced by the walk module.

struct TrajectorySummary {
  std::int64_t steps = 0;
  std::int32_t height_quarter = 0;  // |X_{floor(n/4)}|
  std::int32_t height_half = 0;     // |X_{floor(n/2)}|
  std::int32_t height_full = 0;     // |X_n|
  bool stuck = false;
  int n_renewals = 0;
  int n_uncensored = 0;
};

inline TrajectorySummary summarize_trajectory(const Trajectory& tr) {
  TrajectorySummary s;
  s.steps = static_cast<std::int64_t>(tr.steps());
  s.stuck = tr.stuck;
  if (!tr.heights.empty()) {
    const auto at = [&](double t) {
      const std::size_t k = static_cast<std::size_t>(
          static_cast<double>(s.steps) * t);
      return tr.heights[std::min(k, tr.heights.size() - 1)];
    };
    s.height_quarter = at(0.25);
    s.height_half = at(0.5);
    s.height_full = tr.heights.back();
  }
  return s;
}

enum class SpeedMethod { direct, renewal_ratio };

struct SpeedEstimate {
  double s_hat = 0.0;
  Interval ci;
  SpeedMethod method = SpeedMethod::direct;
  std::int64_t n_effective = 0;
  // renewal-ratio components: s_hat = s_hx / s_htau
  double s_hx = 0.0;    // mean height gain per interval
  double s_htau = 0.0;  // mean duration per interval
};

// Mean of |X_n|/n across replicas with a normal-approximation CI.
inline SpeedEstimate speed_direct(std::span<const TrajectorySummary> reps) {
  if (reps.size() < 30)
    throw std::invalid_argument("speed_direct: need at least 30 replicas");
  std::vector<double> speeds;
  speeds.reserve(reps.size());
  for (const auto& r : reps)
    speeds.push_back(static_cast<double>(r.height_full) / static_cast<double>(r.steps));
  SpeedEstimate e;
  e.method = SpeedMethod::direct;
  e.s_hat = mean(speeds);
  e.ci = mean_ci(speeds);
  e.n_effective = static_cast<std::int64_t>(reps.size());
  return e;
}

// Ratio estimator sum(height gains) / sum(durations) over renewal intervals,
// with a batch-means CI (intervals are only conditionally independent).
inline SpeedEstimate speed_renewal(std::span<const ChainEntry> intervals,
                                   int n_batches = 30) {
  if (intervals.size() < 100)
    throw std::invalid_argument("speed_renewal: need at least 100 intervals");
  std::vector<double> gains, durs;
  gains.reserve(intervals.size());
  durs.reserve(intervals.size());
  for (const auto& e : intervals) {
    gains.push_back(static_cast<double>(e.interval_height));
    durs.push_back(static_cast<double>(e.duration));
  }
  const auto ratio = batch_means_ratio(gains, durs, n_batches);
  SpeedEstimate e;
  e.method = SpeedMethod::renewal_ratio;
  e.s_hat = ratio.value;
  e.ci = ratio.ci;
  e.n_effective = static_cast<std::int64_t>(intervals.size());
  e.s_hx = mean(gains);
  e.s_htau = mean(durs);
  return e;
}

inline bool speeds_agree(const SpeedEstimate& a, const SpeedEstimate& b) {
  return std::abs(a.s_hat - b.s_hat) <= a.ci.half_width() + b.ci.half_width();
}

// ---------------------------------------------------------------------------
// CLT diagnostics: normalized deviations at checkpoints t = 1/4, 1/2, 1,
// KS against the standard normal with a Monte Carlo calibrated critical
// value, and the Brownian variance-scaling check var(t=1/2)/var(t=1).

struct CltDiagnostics {
  double sigma_hat = 0.0;  // sd of (|X_n| - s n)/sqrt(n) across replicas
  std::vector<double> z_quarter, z_half, z_full;
  double ks_statistic = 0.0;
  double ks_critical = 0.0;
  bool ks_pass = false;
  double variance_ratio = 0.0;  // var(t=0.5 deviations) / var(t=1 deviations)
};

inline CltDiagnostics clt_check(std::span<const TrajectorySummary> reps,
                                double s_hat, double alpha = 0.05,
                                int ks_calibration = 2000) {
  if (reps.size() < 10)
    throw std::invalid_argument("clt_check: need at least 10 replicas");
  CltDiagnostics d;
  std::vector<double> dev_q, dev_h, dev_f;
  for (const auto& r : reps) {
    const double n = static_cast<double>(r.steps);
    const double sq = std::sqrt(n);
    dev_q.push_back((r.height_quarter - s_hat * std::floor(n * 0.25)) / sq);
    dev_h.push_back((r.height_half - s_hat * std::floor(n * 0.5)) / sq);
    dev_f.push_back((r.height_full - s_hat * n) / sq);
  }
  d.sigma_hat = stddev(dev_f);
  const double sig = d.sigma_hat > 0 ? d.sigma_hat : 1.0;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    d.z_quarter.push_back(dev_q[i] / sig);
    d.z_half.push_back(dev_h[i] / sig);
    d.z_full.push_back(dev_f[i] / sig);
  }
  std::vector<double> stud = d.z_full;
  studentize(stud);
  d.ks_statistic = ks_statistic_normal(stud);
  d.ks_critical = ks_critical_studentized(stud.size(), alpha, ks_calibration);
  d.ks_pass = d.ks_statistic < d.ks_critical;
  const double v_half = variance(d.z_half);
  const double v_full = variance(d.z_full);
  d.variance_ratio = v_full > 0 ? v_half / v_full : 0.0;
  return d;
}

// Renewal-route sigma candidates. W_i = gain_i/s_X - dur_i/s_tau (centred);
// the algebra-consistent prefactor is s_h sqrt(s_tau), i.e.
// sigma = s_X sigma_W / sqrt(s_tau). The literal sqrt(s_tau) sigma_W variant
// is reported too; neither is asserted against the empirical one.
struct SigmaCandidates {
  double sigma_w = 0.0;
  double formula = 0.0;          // s_h * sqrt(s_tau) * sigma_w
  double formula_literal = 0.0;  // sqrt(s_tau) * sigma_w
};

inline SigmaCandidates sigma_from_renewals(std::span<const ChainEntry> intervals) {
  if (intervals.size() < 2) return {};
  double sx = 0.0, st = 0.0;
  for (const auto& e : intervals) {
    sx += static_cast<double>(e.interval_height);
    st += static_cast<double>(e.duration);
  }
  sx /= static_cast<double>(intervals.size());
  st /= static_cast<double>(intervals.size());
  std::vector<double> w;
  w.reserve(intervals.size());
  for (const auto& e : intervals)
    w.push_back(e.interval_height / sx - e.duration / st);
  SigmaCandidates s;
  s.sigma_w = stddev(w);
  s.formula = (sx / st) * std::sqrt(st) * s.sigma_w;
  s.formula_literal = std::sqrt(st) * s.sigma_w;
  return s;
}

// theta_k / k -> 1 / s_tau: renewal counting consistency.
inline double renewal_rate(std::span<const RenewalRecord> recs, std::int64_t n_steps) {
  std::int64_t cnt = 0;
  for (const auto& r : recs) cnt += (r.tau <= n_steps);
  return static_cast<double>(cnt) / static_cast<double>(n_steps);
}

// ---------------------------------------------------------------------------
// Growth rate: least-squares slope of log |Z_k| vs k over surviving replicas.

struct GrowthRate {
  double log_lambda_hat = 0.0;
  Interval ci;
  int surviving = 0;
  int k_lo = 0, k_hi = 0;
};

inline GrowthRate growth_rate(const std::vector<std::vector<std::uint64_t>>& tables,
                              int k_lo, int k_hi) {
  if (k_hi <= k_lo) throw std::invalid_argument("growth_rate: bad k range");
  std::vector<double> slopes;
  for (const auto& sizes : tables) {
    if (sizes.size() <= static_cast<std::size_t>(k_hi)) continue;
    if (sizes[static_cast<std::size_t>(k_hi)] == 0) continue;  // extinct
    std::vector<double> xs, ys;
    for (int k = k_lo; k <= k_hi; ++k) {
      xs.push_back(k);
      ys.push_back(std::log(static_cast<double>(sizes[static_cast<std::size_t>(k)])));
    }
    slopes.push_back(ols_slope(xs, ys).slope);
  }
  if (slopes.empty())
    throw std::runtime_error("growth_rate: all replicas extinct before k_hi");
  GrowthRate g;
  g.log_lambda_hat = mean(slopes);
  g.ci = mean_ci(slopes);
  g.surviving = static_cast<int>(slopes.size());
  g.k_lo = k_lo;
  g.k_hi = k_hi;
  return g;
}

// ---------------------------------------------------------------------------
// Duration-tail diagnostics. Reports the empirical log-survival against
// k^{1/6} and against k, plus a moment-stability verdict: stretched
// exponential tails make the mean and second moment stable when the sample
// doubles, a heavy (non-summable) tail does not. No tail constants are
// estimated as ground truth.

struct TailFit {
  double rel_change_mean = 0.0;  // |mean(first half) - mean(full)| / mean(full)
  double rel_change_m2 = 0.0;
  bool stable = false;           // both below the 5% gate
  bool monotone_decay = false;   // log-survival non-increasing over support
  std::vector<double> ks;        // support points
  std::vector<double> log_survival;
  std::vector<double> k_sixth;   // k^{1/6} for the stretched-exponential plot
};

inline TailFit tail_fit(std::span<const double> durations, double gate = 0.05) {
  if (durations.size() < 1000)
    throw std::invalid_argument("tail_fit: need at least 1000 durations");
  TailFit f;
  const std::size_t half = durations.size() / 2;
  double m1h = 0.0, m2h = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    const double x = durations[i];
    m1 += x;
    m2 += x * x;
    if (i < half) {
      m1h += x;
      m2h += x * x;
    }
  }
  m1 /= static_cast<double>(durations.size());
  m2 /= static_cast<double>(durations.size());
  m1h /= static_cast<double>(half);
  m2h /= static_cast<double>(half);
  f.rel_change_mean = std::abs(m1h - m1) / m1;
  f.rel_change_m2 = std::abs(m2h - m2) / m2;
  f.stable = f.rel_change_mean < gate && f.rel_change_m2 < gate;

  std::vector<double> sorted(durations.begin(), durations.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double kmax = sorted.back();
  f.monotone_decay = true;
  double prev = 1e300;
  for (double k = 1.0; k <= kmax; k += std::max(1.0, std::floor(kmax / 64.0))) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), k);
    const double surv = static_cast<double>(sorted.end() - it) / n;
    if (surv <= 0.0) break;
    const double ls = std::log(surv);
    if (ls > prev + 1e-12) f.monotone_decay = false;
    prev = ls;
    f.ks.push_back(k);
    f.log_survival.push_back(ls);
    f.k_sixth.push_back(std::pow(k, 1.0 / 6.0));
  }
  return f;
}

// ---------------------------------------------------------------------------
// Drift diagnostics on the renewal chain. Two checks:
//  * V-contraction: bin intervals by V(Y_i) (deciles); for the top bins the
//    conditional mean of V(Y_{i+1}) must sit below (2/3) * bin centre + c,
//    with c fitted from the bottom half of the bins.
//  * phi drift: the conditional mean of phi(Y_{i+1}) - phi(Y_i) over large
//    phi(Y_i) must be negative.
// Pairs never straddle replica boundaries; pass one chain per replica.

struct DriftBin {
  double center = 0.0;
  double next_mean = 0.0;
  double next_se = 0.0;
  std::size_t count = 0;
};

struct DriftReport {
  std::vector<DriftBin> v_bins;
  double fitted_c = 0.0;
  bool v_contraction_pass = false;
  double phi_threshold = 0.0;      // top-decile cut (or user-provided)
  double phi_increment_mean = 0.0;
  double phi_increment_se = 0.0;
  std::size_t phi_n = 0;
  bool phi_drift_negative = false;
  std::size_t pairs = 0;
};

inline DriftReport drift_check(const std::vector<std::vector<ChainEntry>>& chains,
                               std::optional<double> phi_threshold = {},
                               int n_bins = 10) {
  std::vector<std::pair<double, double>> v_pairs;   // (V_i, V_{i+1})
  std::vector<std::pair<double, double>> phi_pairs; // (phi_i, phi_{i+1})
  for (const auto& ch : chains)
    for (std::size_t i = 0; i + 1 < ch.size(); ++i) {
      v_pairs.emplace_back(ch[i].V, ch[i + 1].V);
      phi_pairs.emplace_back(ch[i].phi, ch[i + 1].phi);
    }
  if (v_pairs.size() < 100)
    throw std::invalid_argument("drift_check: need at least 100 interval pairs");
  DriftReport rep;
  rep.pairs = v_pairs.size();

  std::sort(v_pairs.begin(), v_pairs.end());
  const std::size_t per = v_pairs.size() / static_cast<std::size_t>(n_bins);
  for (int b = 0; b < n_bins; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * per;
    const std::size_t hi = (b == n_bins - 1) ? v_pairs.size() : lo + per;
    DriftBin bin;
    bin.count = hi - lo;
    for (std::size_t i = lo; i < hi; ++i) {
      bin.center += v_pairs[i].first;
      bin.next_mean += v_pairs[i].second;
    }
    bin.center /= static_cast<double>(bin.count);
    bin.next_mean /= static_cast<double>(bin.count);
    double ss = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double dv = v_pairs[i].second - bin.next_mean;
      ss += dv * dv;
    }
    if (bin.count > 1)
      bin.next_se = std::sqrt(ss / static_cast<double>(bin.count - 1) /
                              static_cast<double>(bin.count));
    rep.v_bins.push_back(bin);
  }
  const int half = n_bins / 2;
  for (int b = 0; b < half; ++b)
    rep.fitted_c = std::max(
        rep.fitted_c, rep.v_bins[static_cast<std::size_t>(b)].next_mean -
                          (2.0 / 3.0) * rep.v_bins[static_cast<std::size_t>(b)].center);
  // V has heavy (stretched-exponential squared) tails, so bin means carry
  // sizeable sampling error; the verdict allows 3 standard errors, like the
  // other Monte Carlo gates.
  rep.v_contraction_pass = true;
  for (int b = half; b < n_bins; ++b) {
    const auto& bin = rep.v_bins[static_cast<std::size_t>(b)];
    if (bin.next_mean > (2.0 / 3.0) * bin.center + rep.fitted_c + 3.0 * bin.next_se)
      rep.v_contraction_pass = false;
  }

  std::vector<double> phis;
  phis.reserve(phi_pairs.size());
  for (const auto& p : phi_pairs) phis.push_back(p.first);
  rep.phi_threshold = phi_threshold ? *phi_threshold : quantile(phis, 0.9);
  std::vector<double> incs;
  for (const auto& p : phi_pairs)
    if (p.first > rep.phi_threshold) incs.push_back(p.second - p.first);
  rep.phi_n = incs.size();
  if (!incs.empty()) {
    rep.phi_increment_mean = mean(incs);
    rep.phi_increment_se =
        incs.size() > 1 ? stddev(incs) / std::sqrt(static_cast<double>(incs.size()))
                        : 0.0;
    rep.phi_drift_negative = rep.phi_increment_mean < 0.0;
  }
  return rep;
}

}  // namespace gffwalk
