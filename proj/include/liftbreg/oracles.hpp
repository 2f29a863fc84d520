#pragma once

// Slow reference implementations. Nothing here calls into the solver code
// paths it is used to check (the grid prox search evaluates the envelope, but
// never the prox).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "liftbreg/envelope.hpp"
#include "liftbreg/labels.hpp"

namespace liftbreg::oracles {

struct GridOracleConfig {
  std::size_t resolution = 101;  // points per axis
  int refinements = 4;           // zoom levels around the best grid point
};

/// Exact minimizer of 0.5 ||u - f||^2 + weight * sum_i |u_{i+1} - u_i| via the
/// taut string: the shortest path through the tube of radius `weight` around
/// the cumulative sums of f; u is its slope.
inline std::vector<double> taut_string_tv1d(std::span<const double> f, double weight) {
  if (!(weight > 0.0)) throw std::invalid_argument("taut string weight must be positive");
  const std::size_t n = f.size();
  if (n <= 1) return {f.begin(), f.end()};
  std::vector<double> cum(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) cum[i + 1] = cum[i] + f[i];
  auto lower = [&](std::size_t k) { return (k == 0 || k == n) ? cum[k] : cum[k] - weight; };
  auto upper = [&](std::size_t k) { return (k == 0 || k == n) ? cum[k] : cum[k] + weight; };

  std::vector<double> u(n);
  std::size_t k0 = 0;
  double y0 = 0.0;
  while (k0 < n) {
    double max_lo = -std::numeric_limits<double>::infinity();
    double min_hi = std::numeric_limits<double>::infinity();
    std::size_t arg_lo = k0, arg_hi = k0;
    std::size_t k = k0 + 1;
    std::size_t knot = n;
    double knot_y = cum[n];
    double slope = 0.0;
    for (; k <= n; ++k) {
      const double dk = static_cast<double>(k - k0);
      const double lo = (lower(k) - y0) / dk;
      const double hi = (upper(k) - y0) / dk;
      if (lo > min_hi) {
        // string bends down at the upper bound
        knot = arg_hi;
        knot_y = upper(arg_hi);
        slope = min_hi;
        break;
      }
      if (hi < max_lo) {
        knot = arg_lo;
        knot_y = lower(arg_lo);
        slope = max_lo;
        break;
      }
      if (lo >= max_lo) {
        max_lo = lo;
        arg_lo = k;
      }
      if (hi <= min_hi) {
        min_hi = hi;
        arg_hi = k;
      }
    }
    if (k > n) {
      knot = n;
      knot_y = cum[n];
      slope = (cum[n] - y0) / static_cast<double>(n - k0);
    }
    for (std::size_t i = k0; i < knot; ++i) u[i] = slope;
    k0 = knot;
    y0 = knot_y;
  }
  return u;
}

/// Discrete double Legendre transform of samples on an equispaced grid of
/// [0, 1] (the convex envelope up to the slope-grid resolution).
inline std::vector<double> brute_biconjugate_1d(std::span<const double> samples,
                                                std::size_t slope_count = 0) {
  const std::size_t n = samples.size();
  if (n < 101) throw std::invalid_argument("biconjugate oracle needs at least 101 samples");
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) x[k] = static_cast<double>(k) / static_cast<double>(n - 1);
  double smin = std::numeric_limits<double>::infinity(), smax = -smin;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double s = (samples[k + 1] - samples[k]) / (x[k + 1] - x[k]);
    smin = std::min(smin, s);
    smax = std::max(smax, s);
  }
  if (slope_count == 0) slope_count = 4 * n;
  std::vector<double> slopes(slope_count), conj(slope_count);
  for (std::size_t m = 0; m < slope_count; ++m) {
    slopes[m] = smin + (smax - smin) * static_cast<double>(m) / static_cast<double>(slope_count - 1);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) best = std::max(best, slopes[m] * x[k] - samples[k]);
    conj[m] = best;
  }
  std::vector<double> env(n);
  for (std::size_t k = 0; k < n; ++k) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < slope_count; ++m) best = std::max(best, slopes[m] * x[k] - conj[m]);
    env[k] = best;
  }
  return env;
}

/// Convex envelope of rho on one interval, sampled on `n` points of alpha in [0, 1].
inline std::vector<double> interval_envelope(const PieceModel& model, const LabelSet& labels,
                                             std::size_t i, std::size_t n) {
  std::vector<double> s(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double a = static_cast<double>(k) / static_cast<double>(n - 1);
    s[k] = model.value(i, labels[i] + a * labels.widths()[i], labels);
  }
  return brute_biconjugate_1d(s);
}

namespace detail {
inline double interp(const std::vector<double>& v, double a) {
  const double pos = std::clamp(a, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const std::size_t k = std::min(static_cast<std::size_t>(pos), v.size() - 2);
  const double f = pos - static_cast<double>(k);
  return (1.0 - f) * v[k] + f * v[k + 1];
}
}  // namespace detail

/// rho**(u) for l <= 2 by brute force over primal decompositions
/// u = theta 1_1^{a1} + (1 - theta) 1_2^{a2}, with each interval's own convex
/// envelope taken from the double Legendre transform on a 2001-point grid.
inline double grid_biconjugate(const PieceModel& model, const LabelSet& labels,
                               std::span<const double> u, std::size_t alpha_points = 2001,
                               std::size_t theta_points = 20001) {
  const std::size_t l = labels.intervals();
  if (l > 2) throw std::invalid_argument("grid biconjugate oracle supports l <= 2");
  const double inf = std::numeric_limits<double>::infinity();
  constexpr double tol = 1e-12;
  if (l == 1) {
    if (u[0] < -tol || u[0] > 1.0 + tol) return inf;
    return detail::interp(interval_envelope(model, labels, 0, alpha_points), u[0]);
  }
  if (u[0] > 1.0 + tol || u[1] < -tol || u[1] > u[0] + tol) return inf;
  const auto e1 = interval_envelope(model, labels, 0, alpha_points);
  const auto e2 = interval_envelope(model, labels, 1, alpha_points);
  double best = inf;
  for (std::size_t k = 0; k < theta_points; ++k) {
    const double theta = static_cast<double>(k) / static_cast<double>(theta_points - 1);
    // theta (a1, 0) + (1 - theta) (1, a2) = u
    double cost = 0.0;
    if (theta > 0.0) {
      const double a1 = (u[0] - (1.0 - theta)) / theta;
      if (a1 < -tol || a1 > 1.0 + tol) continue;
      cost += theta * detail::interp(e1, a1);
    } else if (std::abs(u[0] - 1.0) > tol) {
      continue;
    }
    if (theta < 1.0) {
      const double a2 = u[1] / (1.0 - theta);
      if (a2 < -tol || a2 > 1.0 + tol) continue;
      cost += (1.0 - theta) * detail::interp(e2, a2);
    } else if (std::abs(u[1]) > tol) {
      continue;
    }
    best = std::min(best, cost);
  }
  return best;
}

/// Grid search for argmin_w ||w - u||^2 / (2 tau) + rho**(w) over conv(Gamma), l <= 2.
inline std::vector<double> grid_prox_oracle(const Envelope& env, std::span<const double> u,
                                            double tau, const GridOracleConfig& cfg = {}) {
  const std::size_t l = env.intervals();
  if (l > 2) throw std::invalid_argument("grid prox oracle supports l <= 2");
  if (cfg.resolution < 101) throw std::invalid_argument("grid oracle resolution must be >= 101");
  auto objective = [&](std::span<const double> w) {
    double q = 0.0;
    for (std::size_t i = 0; i < l; ++i) q += (w[i] - u[i]) * (w[i] - u[i]);
    return q / (2.0 * tau) + env.eval(w);
  };
  const std::size_t n = cfg.resolution;
  double lo0 = 0.0, hi0 = 1.0, lo1 = 0.0, hi1 = 1.0;
  std::vector<double> best(l, 0.0);
  for (int level = 0; level <= cfg.refinements; ++level) {
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> w(l);
    const double step0 = (hi0 - lo0) / static_cast<double>(n - 1);
    const double step1 = (hi1 - lo1) / static_cast<double>(n - 1);
    for (std::size_t a = 0; a < n; ++a) {
      w[0] = lo0 + step0 * static_cast<double>(a);
      const std::size_t inner = l == 2 ? n : 1;
      for (std::size_t b = 0; b < inner; ++b) {
        if (l == 2) {
          w[1] = lo1 + step1 * static_cast<double>(b);
          if (w[1] > w[0]) continue;
        }
        const double v = objective(w);
        if (v < best_val) {
          best_val = v;
          best = w;
        }
      }
    }
    // zoom to +-2 cells around the incumbent, clipped to the unit box
    lo0 = std::max(0.0, best[0] - 2.0 * step0);
    hi0 = std::min(1.0, best[0] + 2.0 * step0);
    if (l == 2) {
      lo1 = std::max(0.0, best[1] - 2.0 * step1);
      hi1 = std::min(1.0, best[1] + 2.0 * step1);
    }
  }
  return best;
}

}  // namespace liftbreg::oracles
