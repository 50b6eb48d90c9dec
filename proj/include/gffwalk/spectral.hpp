// Copyright (c) 2026 gffwalk contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gffwalk/stats.hpp"

namespace gffwalk {

// Nystrom machinery for the intergenerational operators on L^2(nu), where
// nu = N(0, (d-1)/(d-2)) is the root marginal and nu_1 = N(0, d/(d-1)) the
// child noise. Everything here is deterministic: fixed grid in, values out.
//
//   (L_h f)(a) = (d-1) 1_{a>=h} E_Y[ f(a/(d-1)+Y) 1_{a/(d-1)+Y >= h} ]
//   (R_h f)(a) = 1_{a<h} + 1_{a>=h} E_Y[ f(a/(d-1)+Y) ]^{d-1}
//   (A_h^f g)(a) = 1_{a>=h} (d-1) E_Y[ f(a/(d-1)+Y) ]^{d-2} E_Y[ g(a/(d-1)+Y) ]
//
// with Y ~ nu_1. In kernel form the L_h expectation is an integral over
// [h, inf) against the shifted nu_1 density, so the domain is truncated to
// [h, h+T] and discretized with composite Gauss-Legendre panels. Functions in
// S_h (q_h and its iterates) are 1 below h; that part of the expectation is a
// Gaussian tail evaluated analytically, leaving only [h, h+T] to quadrature.

inline double nu_sigma(int d) { return std::sqrt(double(d - 1) / double(d - 2)); }
inline double nu1_sigma(int d) { return std::sqrt(double(d) / double(d - 1)); }

// Gauss-Legendre nodes/weights on [a, b] by Newton iteration on P_n.
inline void gauss_legendre(int n, double a, double b, std::vector<double>& x,
                           std::vector<double>& w) {
  x.resize(static_cast<std::size_t>(n));
  w.resize(static_cast<std::size_t>(n));
  const double xm = 0.5 * (b + a);
  const double xl = 0.5 * (b - a);
  const int m = (n + 1) / 2;
  for (int i = 1; i <= m; ++i) {
    double z = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
    double z1, pp;
    do {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      z1 = z;
      z = z1 - p1 / pp;
    } while (std::abs(z - z1) > 3.0e-15);
    double p1 = 1.0, p2 = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p3 = p2;
      p2 = p1;
      p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
    }
    pp = n * (z * p1 - p2) / (z * z - 1.0);
    x[static_cast<std::size_t>(i - 1)] = xm - xl * z;
    x[static_cast<std::size_t>(n - i)] = xm + xl * z;
    w[static_cast<std::size_t>(i - 1)] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
    w[static_cast<std::size_t>(n - i)] = w[static_cast<std::size_t>(i - 1)];
  }
}

struct QuadratureGrid {
  int d = 3;
  double h = 0.0;
  double truncation = 0.0;  // grid covers [h, h+T]
  std::vector<double> nodes;
  std::vector<double> weights;
  double tail_bound = 0.0;     // sup over grid of nu_1 mass beyond h+T
  double nu_tail_mass = 0.0;   // nu mass beyond h+T

  int size() const { return static_cast<int>(nodes.size()); }

  // T such that every expectation's truncated nu_1 tail stays below ~1e-10,
  // and never less than 10 standard deviations of nu.
  static double default_truncation(int d, double h) {
    const double z = 6.5;  // Q(6.5) ~ 4e-11
    const double t_tail = z * nu1_sigma(d) * double(d - 1) / double(d - 2) - h;
    return std::max(10.0 * nu_sigma(d), t_tail);
  }

  static QuadratureGrid make(int d, double h, int m = 400, double T = 0.0) {
    if (d < 3) throw std::invalid_argument("QuadratureGrid: d must be >= 3");
    if (m < 16) m = 16;
    QuadratureGrid g;
    g.d = d;
    g.h = h;
    g.truncation = (T > 0.0) ? T : default_truncation(d, h);
    const int per_panel = 16;
    const int n_panels = (m + per_panel - 1) / per_panel;
    const double width = g.truncation / n_panels;
    std::vector<double> px, pw;
    for (int p = 0; p < n_panels; ++p) {
      gauss_legendre(per_panel, h + p * width, h + (p + 1) * width, px, pw);
      g.nodes.insert(g.nodes.end(), px.begin(), px.end());
      g.weights.insert(g.weights.end(), pw.begin(), pw.end());
    }
    const double s1 = nu1_sigma(d);
    const double top = h + g.truncation;
    double tb = 0.0;
    for (double a : g.nodes) tb = std::max(tb, normal_sf((top - a / (d - 1)) / s1));
    g.tail_bound = tb;
    g.nu_tail_mass = normal_sf(top / nu_sigma(d));
    return g;
  }
};

// E_Y[ f(a/(d-1) + Y) ] for a grid function f extended by `below` on
// (-inf, h) and by 0 beyond h+T.
inline double expect_nu1(const QuadratureGrid& g, std::span<const double> f,
                         double a, double below) {
  const double c = a / (g.d - 1);
  const double s1 = nu1_sigma(g.d);
  double s = (below != 0.0) ? below * normal_cdf((g.h - c) / s1) : 0.0;
  for (int j = 0; j < g.size(); ++j)
    s += g.weights[static_cast<std::size_t>(j)] *
         normal_pdf(g.nodes[static_cast<std::size_t>(j)] - c, s1) *
         f[static_cast<std::size_t>(j)];
  return s;
}

// (L_h f)(a); f lives on the grid and is treated as 0 outside [h, h+T] (the
// operator's own indicator kills the part below h).
inline double eval_Lh(const QuadratureGrid& g, std::span<const double> f, double a) {
  if (a < g.h) return 0.0;
  return (g.d - 1) * expect_nu1(g, f, a, 0.0);
}

inline std::vector<double> apply_Lh(const QuadratureGrid& g,
                                    std::span<const double> f) {
  std::vector<double> out(static_cast<std::size_t>(g.size()));
  for (int i = 0; i < g.size(); ++i)
    out[static_cast<std::size_t>(i)] = eval_Lh(g, f, g.nodes[static_cast<std::size_t>(i)]);
  return out;
}

// E_a |Z_k^{h,+}| = (L_h^k 1)(a).
inline double expected_generation_size(const QuadratureGrid& g, double a, int k) {
  std::vector<double> f(static_cast<std::size_t>(g.size()), 1.0);
  for (int i = 1; i < k; ++i) f = apply_Lh(g, f);
  return eval_Lh(g, f, a);
}

// Discrete L^2(nu) inner product; grid functions vanish below h.
inline double nu_inner(const QuadratureGrid& g, std::span<const double> f,
                       std::span<const double> fg) {
  const double sn = nu_sigma(g.d);
  double s = 0.0;
  for (int j = 0; j < g.size(); ++j)
    s += g.weights[static_cast<std::size_t>(j)] *
         normal_pdf(g.nodes[static_cast<std::size_t>(j)], sn) *
         f[static_cast<std::size_t>(j)] * fg[static_cast<std::size_t>(j)];
  return s;
}

inline double nu_norm(const QuadratureGrid& g, std::span<const double> f) {
  return std::sqrt(nu_inner(g, f, f));
}

struct SpectralResult {
  double lambda = 0.0;
  std::vector<double> chi;  // unit L^2(nu) norm, positive
  double residual = 0.0;    // || L chi - lambda chi ||_{L^2(nu)}
  int iterations = 0;
  int d = 3;
  double h = 0.0;
  double truncation = 0.0;
  int grid_size = 0;
  double tail_bound = 0.0;
};

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dominant eigenpair of L_h by power iteration from the constant function.
// The eigenvalue is simple and the eigenfunction positive on [h, inf), so the
// iteration is safe and deterministic.
inline SpectralResult top_eigen(const QuadratureGrid& g, double tol = 1e-10,
                                int max_iter = 50000) {
  const int m = g.size();
  // Precompute the kernel matrix K[i][j] = (d-1) w_j nu1(a_j - a_i/(d-1)).
  const double s1 = nu1_sigma(g.d);
  std::vector<double> K(static_cast<std::size_t>(m) * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      K[static_cast<std::size_t>(i) * m + j] =
          (g.d - 1) * g.weights[static_cast<std::size_t>(j)] *
          normal_pdf(g.nodes[static_cast<std::size_t>(j)] -
                         g.nodes[static_cast<std::size_t>(i)] / (g.d - 1),
                     s1);

  std::vector<double> v(static_cast<std::size_t>(m), 1.0), w(static_cast<std::size_t>(m));
  double lambda = 0.0, lambda_prev = -1.0;
  int it = 0;
  for (; it < max_iter; ++it) {
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      const double* row = &K[static_cast<std::size_t>(i) * m];
      for (int j = 0; j < m; ++j) s += row[j] * v[static_cast<std::size_t>(j)];
      w[static_cast<std::size_t>(i)] = s;
    }
    lambda = nu_inner(g, w, v) / nu_inner(g, v, v);
    const double nw = nu_norm(g, w);
    for (double& x : w) x /= nw;
    std::swap(v, w);
    if (it > 0 && std::abs(lambda - lambda_prev) < tol) break;
    lambda_prev = lambda;
  }
  if (it == max_iter)
    throw ConvergenceError("top_eigen: power iteration did not converge");

  SpectralResult r;
  r.lambda = lambda;
  r.chi = v;
  r.iterations = it + 1;
  r.d = g.d;
  r.h = g.h;
  r.truncation = g.truncation;
  r.grid_size = m;
  r.tail_bound = g.tail_bound;
  // Residual in L^2(nu).
  std::vector<double> res(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    const double* row = &K[static_cast<std::size_t>(i) * m];
    for (int j = 0; j < m; ++j) s += row[j] * v[static_cast<std::size_t>(j)];
    res[static_cast<std::size_t>(i)] = s - lambda * v[static_cast<std::size_t>(i)];
  }
  r.residual = nu_norm(g, res);
  return r;
}

inline double lambda_of(int d, double h, int grid_m = 400) {
  return top_eigen(QuadratureGrid::make(d, h, grid_m)).lambda;
}

// Unique h with lambda_h = 1, by bisection on the decreasing map h -> lambda_h.
inline double solve_hstar(int d, double tol = 1e-6, int grid_m = 400) {
  if (tol <= 0.0) throw std::invalid_argument("solve_hstar: tol must be positive");
  double lo = 0.0, hi = 1.0;
  double f_lo = lambda_of(d, lo, grid_m);
  int guard = 0;
  while (f_lo <= 1.0) {
    lo -= 1.0;
    f_lo = lambda_of(d, lo, grid_m);
    if (++guard > 32) throw ConvergenceError("solve_hstar: no lower bracket");
  }
  double f_hi = lambda_of(d, hi, grid_m);
  guard = 0;
  while (f_hi >= 1.0) {
    hi += 1.0;
    f_hi = lambda_of(d, hi, grid_m);
    if (++guard > 32) throw ConvergenceError("solve_hstar: no upper bracket");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double f = lambda_of(d, mid, grid_m);
    if (std::abs(f - 1.0) < tol) return mid;
    (f > 1.0 ? lo : hi) = mid;
  }
  throw ConvergenceError("solve_hstar: bisection did not meet tolerance");
}

// ---------------------------------------------------------------------------
// Extinction function q_h: the minimal fixed point of R_h in S_h, reached by
// iterating from f_0 = 1_{(-inf,h)}. The k-th iterate is exactly
// P_a(Z_k^{h,+} empty), so the iterates increase to q_h.

struct QhTable {
  int d = 3;
  double h = 0.0;
  std::vector<double> values;  // on grid.nodes; q = 1 below h by convention
  int iterations = 0;
  double residual = 0.0;  // sup |R_h q - q| on the grid
  bool converged = false;
};

inline std::vector<double> apply_Rh(const QuadratureGrid& g,
                                    std::span<const double> f) {
  std::vector<double> out(static_cast<std::size_t>(g.size()));
  for (int i = 0; i < g.size(); ++i) {
    const double e = expect_nu1(g, f, g.nodes[static_cast<std::size_t>(i)], 1.0);
    out[static_cast<std::size_t>(i)] = std::pow(e, g.d - 1);
  }
  return out;
}

inline QhTable iterate_Rh(const QuadratureGrid& g, double tol = 1e-8,
                          int max_iter = 10000) {
  QhTable t;
  t.d = g.d;
  t.h = g.h;
  std::vector<double> f(static_cast<std::size_t>(g.size()), 0.0);
  for (int it = 1; it <= max_iter; ++it) {
    std::vector<double> f2 = apply_Rh(g, f);
    double inc = 0.0;
    for (int j = 0; j < g.size(); ++j)
      inc = std::max(inc, std::abs(f2[static_cast<std::size_t>(j)] -
                                   f[static_cast<std::size_t>(j)]));
    f = std::move(f2);
    t.iterations = it;
    if (inc < tol) {
      t.converged = true;
      t.residual = inc;
      break;
    }
    t.residual = inc;
  }
  t.values = std::move(f);
  return t;
}

// Nystrom evaluation of q_h at an arbitrary point.
inline double eval_qh(const QuadratureGrid& g, const QhTable& t, double a) {
  if (a < g.h) return 1.0;
  return std::pow(expect_nu1(g, t.values, a, 1.0), g.d - 1);
}

// Survival probability of the root cluster.
//   plus mode: eta+ = integral (1 - q_h(a)) dnu(a)
//   full mode: the root has d children, each rooting an independent plus
//   subtree, so eta = integral 1_{a>=h} (1 - m(a)^d) dnu(a) with
//   m(a) = E_Y[ q_h(a/(d-1)+Y) ].
inline double eta_survival(const QuadratureGrid& g, const QhTable& t, bool plus_mode) {
  const double sn = nu_sigma(g.d);
  double s = 0.0;
  double top_term = 0.0;
  for (int j = 0; j < g.size(); ++j) {
    const double a = g.nodes[static_cast<std::size_t>(j)];
    const double wj = g.weights[static_cast<std::size_t>(j)] * normal_pdf(a, sn);
    if (plus_mode) {
      s += wj * (1.0 - t.values[static_cast<std::size_t>(j)]);
    } else {
      const double m = expect_nu1(g, t.values, a, 1.0);
      s += wj * (1.0 - std::pow(m, g.d));
    }
  }
  // nu mass beyond the grid: q_h is essentially 0 there.
  if (plus_mode)
    top_term = g.nu_tail_mass * (1.0 - t.values.back());
  else {
    const double m = expect_nu1(g, t.values, g.h + g.truncation, 1.0);
    top_term = g.nu_tail_mass * (1.0 - std::pow(m, g.d));
  }
  return s + top_term;
}

// ---------------------------------------------------------------------------
// Frechet derivative of R_h at f and its iterated composition, with
// R_h^{k-1} f refreshed at each step of the chain rule.

inline std::vector<double> frechet_A(const QuadratureGrid& g,
                                     std::span<const double> f, double f_below,
                                     std::span<const double> fg, double g_below) {
  std::vector<double> out(static_cast<std::size_t>(g.size()));
  for (int i = 0; i < g.size(); ++i) {
    const double a = g.nodes[static_cast<std::size_t>(i)];
    const double ef = expect_nu1(g, f, a, f_below);
    const double eg = expect_nu1(g, fg, a, g_below);
    out[static_cast<std::size_t>(i)] = (g.d - 1) * std::pow(ef, g.d - 2) * eg;
  }
  return out;
}

// Sup norms of A_{k,h}^f g_h for k = 1..k_max, g_h = 1_{[h,inf)}.
inline std::vector<double> frechet_iterate_norms(const QuadratureGrid& g,
                                                 std::vector<double> f, int k_max) {
  std::vector<double> gm(static_cast<std::size_t>(g.size()), 1.0);
  std::vector<double> norms;
  norms.reserve(static_cast<std::size_t>(k_max));
  for (int k = 1; k <= k_max; ++k) {
    gm = frechet_A(g, f, 1.0, gm, 0.0);
    double sup = 0.0;
    for (double x : gm) sup = std::max(sup, std::abs(x));
    norms.push_back(sup);
    f = apply_Rh(g, f);
  }
  return norms;
}

// ---------------------------------------------------------------------------
// Obstruction integral from the invariant-measure argument:
//   I_z = int_h^inf exp( -(d-1)/(2d) [ (z - t/(d-1))^2 + (t - z/(d-1))^2 ] ) dt.
// I_z -> 0 as z -> inf, which is what rules the invariant measure out.
inline double obstruction_integral(int d, double h, double z) {
  if (z < h) throw std::invalid_argument("obstruction_integral: requires z >= h");
  const double coef = double(d - 1) / (2.0 * d);
  const double q = 1.0 / (d - 1);
  // Gaussian factor in t: centre and width of the integrand.
  const double curv = 2.0 * coef * (1.0 + q * q);
  const double sigma_t = 1.0 / std::sqrt(curv);
  const double centre = 2.0 * z * q / (1.0 + q * q);
  const double upper = std::max(h, centre) + 14.0 * sigma_t;
  const int n_panels = std::max(8, static_cast<int>(std::ceil((upper - h) / (0.5 * sigma_t))));
  std::vector<double> x, w;
  double s = 0.0;
  const double width = (upper - h) / n_panels;
  for (int p = 0; p < n_panels; ++p) {
    gauss_legendre(16, h + p * width, h + (p + 1) * width, x, w);
    for (int j = 0; j < 16; ++j) {
      const double t = x[static_cast<std::size_t>(j)];
      const double e1 = z - t * q;
      const double e2 = t - z * q;
      s += w[static_cast<std::size_t>(j)] * std::exp(-coef * (e1 * e1 + e2 * e2));
    }
  }
  return s;
}

}  // namespace gffwalk
