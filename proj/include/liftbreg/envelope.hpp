#pragma once

// Lifted data term of one pixel and its convex envelope.
//
// The lifted label space lives on the edges 1_0 -> 1_1 -> ... -> 1_l of the
// simplex conv(Gamma) = {1 >= w_1 >= ... >= w_l >= 0}. A point w of the simplex
// has barycentric weights beta_k = w_k - w_{k+1} (w_0 = 1, w_{l+1} = 0), and the
// envelope is the largest piecewise-linear minorant over the labels:
//
//   rho**(w) = max_nu sum_k beta_k nu_k   s.t. the chord nu_{i-1} -> nu_i stays
//                                          below rho on every interval i.
//
// That chain is solved exactly by nested 1D concave maximization (eval).
// The prox is solved in the primal: a point is a convex combination
// sum_i theta_i 1_i^{alpha_i}; for fixed weights theta the best alpha_i is
// closed form, and the remaining problem over the simplex of theta is smooth
// and convex (prox_into).

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "liftbreg/error.hpp"
#include "liftbreg/labels.hpp"

namespace liftbreg {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// rho(t) = a t^2 + b t + c for t in [g_i, g_{i+1}].
struct QuadraticPiece {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

/// rho sampled at n >= 2 equispaced points of [g_i, g_{i+1}] (both ends
/// included), linear in between.
struct SampledPiece {
  std::vector<double> values;
};

using Piece = std::variant<QuadraticPiece, SampledPiece>;

/// rho(x, .) of one pixel, one piece per label interval.
struct PieceModel {
  std::vector<Piece> pieces;

  /// Raw (not convexified) data term at value t of interval i.
  double value(std::size_t i, double t, const LabelSet& labels) const {
    const Piece& p = pieces.at(i);
    if (const auto* q = std::get_if<QuadraticPiece>(&p)) return (q->a * t + q->b) * t + q->c;
    const auto& v = std::get<SampledPiece>(p).values;
    const double alpha = std::clamp((t - labels[i]) / labels.widths()[i], 0.0, 1.0);
    const double pos = alpha * static_cast<double>(v.size() - 1);
    const std::size_t k = std::min(static_cast<std::size_t>(pos), v.size() - 2);
    const double f = pos - static_cast<double>(k);
    return (1.0 - f) * v[k] + f * v[k + 1];
  }
};

struct ProxStats {
  int iterations = 0;
  int newton_steps = 0;
  double kkt_residual = 0.0;
};

/// Immutable convex envelope rho** of one pixel's lifted data term.
class Envelope {
 public:
  static constexpr std::size_t kMaxIntervals = 16;

  Envelope() = default;

  static Envelope build(const PieceModel& model, const LabelSet& labels) {
    const std::size_t l = labels.intervals();
    if (model.pieces.size() != l)
      throw ModelError("piece model has " + std::to_string(model.pieces.size()) +
                       " pieces, label set has " + std::to_string(l) + " intervals");
    if (l > kMaxIntervals) throw ModelError("too many label intervals");
    Envelope env;
    env.pieces_.reserve(l);
    for (std::size_t i = 0; i < l; ++i) {
      const double g0 = labels[i];
      const double w = labels.widths()[i];
      LocalPiece lp;
      if (const auto* q = std::get_if<QuadraticPiece>(&model.pieces[i])) {
        if (!std::isfinite(q->a) || !std::isfinite(q->b) || !std::isfinite(q->c))
          throw ModelError("quadratic piece coefficients must be finite");
        if (q->a < 0.0) throw ModelError("quadratic piece must be convex (a >= 0)");
        // substitute t = g0 + alpha w
        lp.quadratic = true;
        lp.a = q->a * w * w;
        lp.b = (2.0 * q->a * g0 + q->b) * w;
        lp.c = (q->a * g0 + q->b) * g0 + q->c;
      } else {
        const auto& v = std::get<SampledPiece>(model.pieces[i]).values;
        if (v.size() < 2) throw ModelError("sampled piece needs at least two samples");
        for (double x : v)
          if (!std::isfinite(x)) throw ModelError("sampled piece values must be finite");
        lp.quadratic = false;
        lp.first = env.hull_alpha_.size();
        env.lower_hull(v);
        lp.count = env.hull_alpha_.size() - lp.first;
      }
      env.pieces_.push_back(lp);
    }
    return env;
  }

  std::size_t intervals() const { return pieces_.size(); }

  /// Convexified piece i at local coordinate alpha in [0, 1].
  double piece_value(std::size_t i, double alpha) const {
    const LocalPiece& p = pieces_[i];
    if (p.quadratic) return (p.a * alpha + p.b) * alpha + p.c;
    const double* xa = hull_alpha_.data() + p.first;
    const double* xv = hull_value_.data() + p.first;
    std::size_t k = 0;
    while (k + 2 < p.count && alpha > xa[k + 1]) ++k;
    const double f = (alpha - xa[k]) / (xa[k + 1] - xa[k]);
    return (1.0 - f) * xv[k] + f * xv[k + 1];
  }

  /// rho**(w); +inf outside conv(Gamma).
  double eval(std::span<const double> w) const {
    const std::size_t l = pieces_.size();
    if (w.size() != l) throw ModelError("lifted vector has wrong length");
    std::array<double, kMaxIntervals + 1> beta{};
    if (!barycentric(w, beta)) return kInf;

    // xstar[k]: maximizer of E_k(y) = beta_k y + E_{k-1}(min(L_{k-1}(y), xstar[k-1]))
    std::array<double, kMaxIntervals + 1> xstar{};
    xstar[0] = kInf;
    auto chain = [&](std::size_t k, double y) {
      double val = 0.0;
      double cur = y;
      for (std::size_t m = k; m >= 1; --m) {
        val += beta[m] * cur;
        const double x = left_limit(m - 1, cur);
        if (x == -kInf) return -kInf;
        cur = std::min(x, xstar[m - 1]);
      }
      return val + beta[0] * cur;
    };
    double best = 0.0;
    for (std::size_t k = 1; k <= l; ++k) {
      const double ymax = piece_value(k - 1, 1.0);
      const double target = std::min(xstar[k - 1], piece_value(k - 1, 0.0));
      // below y_lo the inner argument is pinned at `target`, so E_k is nondecreasing there
      double span = 1.0 + std::abs(ymax);
      double ylo = ymax - span;
      for (int guard = 0; guard < 200 && left_limit(k - 1, ylo) < target; ++guard) {
        span *= 2.0;
        ylo = ymax - span;
      }
      const auto [arg, val] = golden_max([&](double y) { return chain(k, y); }, ylo, ymax);
      xstar[k] = arg;
      best = val;
    }
    return best;
  }

  /// rho*(v) = max_i [ sum_{j<i} v_j + sup_alpha (alpha v_i - rho_i(alpha)) ].
  double conjugate(std::span<const double> v) const {
    double prefix = 0.0;
    double best = -kInf;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      best = std::max(best, prefix + piece_conjugate(i, v[i]));
      prefix += v[i];
    }
    return best;
  }

  /// argmin_w ||w - u||^2 / (2 tau) + rho**(w), written into `out`.
  /// `weights` (size l) warm-starts the piece weights theta and receives the
  /// final ones; pass all zeros for a cold start.
  ProxStats prox_into(std::span<const double> u, double tau, std::span<double> out,
                      std::span<double> weights) const {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ModelError("prox step tau must be positive");
    const std::size_t l = pieces_.size();
    if (u.size() != l || out.size() != l || weights.size() != l)
      throw ModelError("prox argument has wrong length");
    for (double x : u)
      if (!std::isfinite(x)) throw NumericError("prox argument is not finite");

    Work wk;
    wk.l = l;
    wk.tau = tau;
    std::copy(u.begin(), u.end(), wk.u.begin());
    double wsum = 0.0;
    for (std::size_t i = 0; i < l; ++i) wsum += std::max(weights[i], 0.0);
    if (wsum > 0.0) {
      for (std::size_t i = 0; i < l; ++i) wk.theta[i] = std::max(weights[i], 0.0) / wsum;
    } else {
      cold_start(wk);
    }

    ProxStats stats;
    const double kkt_tol = 1e-12;
    double resid = kInf;
    for (int round = 0; round < 8; ++round) {
      stats.iterations += fista(wk, round == 0 ? 60 : 400, 1e-10);
      stats.newton_steps += newton(wk, 12);
      resid = kkt(wk);
      if (resid <= kkt_tol) break;
    }
    stats.kkt_residual = resid;
    if (!(resid <= 1e-7)) {
      throw NumericError("envelope prox did not converge (KKT residual " + std::to_string(resid) +
                         ", tau " + std::to_string(tau) + ")");
    }
    evaluate(wk, false);
    for (std::size_t i = 0; i < l; ++i) {
      out[i] = wk.w[i];
      weights[i] = wk.theta[i];
    }
    return stats;
  }

  std::vector<double> prox(std::span<const double> u, double tau) const {
    std::vector<double> out(u.size()), weights(u.size(), 0.0);
    prox_into(u, tau, out, weights);
    return out;
  }

 private:
  struct LocalPiece {
    bool quadratic = true;
    double a = 0.0, b = 0.0, c = 0.0;  // in the local coordinate alpha
    std::size_t first = 0, count = 0;  // hull vertex range (sampled pieces)
  };

  struct AlphaSolution {
    double alpha;
    bool free;         // interior of a smooth part
    double curvature;  // second derivative there
  };

  struct Work {
    std::size_t l = 0;
    double tau = 1.0;
    double lip = 0.0;
    std::array<double, kMaxIntervals> u{}, theta{}, alpha{}, w{}, grad{}, omega{};
    std::array<bool, kMaxIntervals> free{};
    double value = 0.0;
  };

  std::vector<LocalPiece> pieces_;
  std::vector<double> hull_alpha_, hull_value_;

  void lower_hull(const std::vector<double>& v) {
    const std::size_t n = v.size();
    const std::size_t start = hull_alpha_.size();
    for (std::size_t k = 0; k < n; ++k) {
      const double x = static_cast<double>(k) / static_cast<double>(n - 1);
      const double y = v[k];
      while (hull_alpha_.size() - start >= 2) {
        const std::size_t m = hull_alpha_.size();
        const double x1 = hull_alpha_[m - 2], y1 = hull_value_[m - 2];
        const double x2 = hull_alpha_[m - 1], y2 = hull_value_[m - 1];
        // drop the middle point unless it lies strictly below the chord
        if ((y2 - y1) * (x - x1) >= (y - y1) * (x2 - x1)) {
          hull_alpha_.pop_back();
          hull_value_.pop_back();
        } else {
          break;
        }
      }
      hull_alpha_.push_back(x);
      hull_value_.push_back(y);
    }
  }

  bool barycentric(std::span<const double> w, std::array<double, kMaxIntervals + 1>& beta) const {
    const std::size_t l = w.size();
    constexpr double tol = 1e-9;
    double prev = 1.0;
    for (std::size_t k = 0; k <= l; ++k) {
      const double next = k < l ? w[k] : 0.0;
      const double b = prev - next;
      if (!std::isfinite(b) || b < -tol) return false;
      beta[k] = std::max(b, 0.0);
      prev = next;
    }
    return true;
  }

  // sup { x : (1 - a) x + a y <= rho_i(a) for all a in [0,1] }, -inf if none.
  double left_limit(std::size_t i, double y) const {
    const LocalPiece& p = pieces_[i];
    if (p.quadratic) {
      const double k = p.a + p.b + p.c - y;
      if (k < 0.0) return -kInf;
      if (p.a <= 0.0) return p.c;
      const double s = std::sqrt(k / p.a);
      if (s >= 1.0) return p.c;
      return 2.0 * std::sqrt(p.a * k) - (2.0 * p.a + p.b - y);
    }
    const double* xa = hull_alpha_.data() + p.first;
    const double* xv = hull_value_.data() + p.first;
    if (y > xv[p.count - 1]) return -kInf;
    double best = kInf;
    for (std::size_t m = 0; m + 1 < p.count; ++m)
      best = std::min(best, (xv[m] - xa[m] * y) / (1.0 - xa[m]));
    return best;
  }

  template <class F>
  static std::pair<double, double> golden_max(F&& f, double lo, double hi) {
    constexpr double r = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - r * (b - a), x2 = a + r * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 200 && (b - a) > 1e-13 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + r * (b - a);
        f2 = f(x2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - r * (b - a);
        f1 = f(x1);
      }
    }
    double arg = f1 >= f2 ? x1 : x2;
    double val = std::max(f1, f2);
    for (double x : {lo, hi}) {
      const double fx = f(x);
      if (fx > val) {
        val = fx;
        arg = x;
      }
    }
    return {arg, val};
  }

  double piece_conjugate(std::size_t i, double s) const {
    const LocalPiece& p = pieces_[i];
    if (p.quadratic) {
      double alpha = p.a > 0.0 ? std::clamp((s - p.b) / (2.0 * p.a), 0.0, 1.0)
                               : (s - p.b > 0.0 ? 1.0 : 0.0);
      return alpha * s - ((p.a * alpha + p.b) * alpha + p.c);
    }
    double best = -kInf;
    for (std::size_t m = 0; m < p.count; ++m)
      best = std::max(best, hull_alpha_[p.first + m] * s - hull_value_[p.first + m]);
    return best;
  }

  // alpha minimizing (T + theta alpha - u)^2 / (2 tau) + theta rho_i(alpha); for
  // theta = 0 the limiting choice (u - T)/tau in d rho_i(alpha).
  AlphaSolution solve_alpha(std::size_t i, double theta, double T, double u, double tau) const {
    const LocalPiece& p = pieces_[i];
    if (p.quadratic) {
      const double denom = theta + 2.0 * tau * p.a;
      const double num = u - T - tau * p.b;
      if (denom > 0.0) {
        const double a = num / denom;
        if (a <= 0.0) return {0.0, false, 0.0};
        if (a >= 1.0) return {1.0, false, 0.0};
        return {a, true, 2.0 * p.a};
      }
      return {num > 0.0 ? 1.0 : 0.0, false, 0.0};
    }
    const double* xa = hull_alpha_.data() + p.first;
    const double* xv = hull_value_.data() + p.first;
    const std::size_t last = p.count - 1;
    for (std::size_t m = 0; m <= last; ++m) {
      if (m == last) return {1.0, false, 0.0};
      const double slope = (xv[m + 1] - xv[m]) / (xa[m + 1] - xa[m]);
      const double s = (u - T - theta * xa[m]) / tau;
      if (s <= slope) return {xa[m], false, 0.0};
      if (theta > 0.0) {
        const double a = (u - T - tau * slope) / theta;
        if (a < xa[m + 1]) return {a, true, 0.0};
      }
    }
    return {1.0, false, 0.0};
  }

  // Objective, alphas, lifted point and gradient at wk.theta.
  void evaluate(Work& wk, bool with_grad) const {
    const std::size_t l = wk.l;
    double tail = 0.0;
    double value = 0.0;
    for (std::size_t jj = l; jj-- > 0;) {
      const double th = wk.theta[jj];
      const AlphaSolution s = solve_alpha(jj, th, tail, wk.u[jj], wk.tau);
      wk.alpha[jj] = s.alpha;
      wk.free[jj] = s.free;
      wk.w[jj] = tail + th * s.alpha;
      const double r = wk.w[jj] - wk.u[jj];
      const double rho = piece_value(jj, s.alpha);
      value += r * r / (2.0 * wk.tau) + th * rho;
      wk.grad[jj] = rho;
      if (s.free) {
        wk.omega[jj] = s.curvature > 0.0 ? 2.0 * wk.tau * 0.5 * s.curvature /
                                               (th + 2.0 * wk.tau * 0.5 * s.curvature)
                                         : 0.0;
      } else {
        wk.omega[jj] = 1.0;
      }
      tail += th;
    }
    wk.value = value;
    if (!with_grad) return;
    double prefix = 0.0;
    for (std::size_t i = 0; i < l; ++i) {
      const double r = wk.w[i] - wk.u[i];
      wk.grad[i] += (wk.alpha[i] * r + prefix) / wk.tau;
      prefix += r;
    }
  }

  static void project_simplex(std::span<double> x) {
    const std::size_t n = x.size();
    std::array<double, kMaxIntervals> s{};
    std::copy(x.begin(), x.end(), s.begin());
    std::sort(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n), std::greater<>());
    double cum = 0.0, shift = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      cum += s[k];
      const double t = (cum - 1.0) / static_cast<double>(k + 1);
      if (k + 1 == n || s[k + 1] <= t) {
        shift = t;
        break;
      }
    }
    for (double& v : x) v = std::max(v - shift, 0.0);
  }

  void cold_start(Work& wk) const {
    // the piece holding the clipped, unlifted argument
    const std::size_t l = wk.l;
    double z = 0.0;
    for (std::size_t i = 0; i < l; ++i) z += std::clamp(wk.u[i], 0.0, 1.0);
    z = std::clamp(z, 0.0, static_cast<double>(l));
    std::size_t i = std::min(static_cast<std::size_t>(z), l - 1);
    wk.theta.fill(0.0);
    wk.theta[i] = 1.0;
  }

  // Accelerated projected gradient on the theta simplex; returns iterations used.
  int fista(Work& wk, int max_iter, double gm_tol) const {
    const std::size_t l = wk.l;
    if (wk.lip <= 0.0) wk.lip = 1.0 / wk.tau;
    std::array<double, kMaxIntervals> x = wk.theta, y = wk.theta, xn{};
    Work probe = wk;
    double t = 1.0;
    evaluate(wk, true);
    double fx = wk.value;
    int it = 0;
    for (; it < max_iter; ++it) {
      probe.theta = y;
      evaluate(probe, true);
      const double fy = probe.value;
      const auto gy = probe.grad;
      double gm = 0.0;
      for (int bt = 0; bt < 60; ++bt) {
        for (std::size_t i = 0; i < l; ++i) xn[i] = y[i] - gy[i] / wk.lip;
        project_simplex(std::span<double>(xn.data(), l));
        double lin = 0.0, quad = 0.0;
        for (std::size_t i = 0; i < l; ++i) {
          const double d = xn[i] - y[i];
          lin += gy[i] * d;
          quad += d * d;
        }
        probe.theta = xn;
        evaluate(probe, false);
        gm = wk.lip * std::sqrt(quad);
        if (probe.value <= fy + lin + 0.5 * wk.lip * quad + 1e-14 * (1.0 + std::abs(fy))) break;
        wk.lip *= 2.0;
      }
      const double fn = probe.value;
      if (fn > fx) {
        // restart momentum
        t = 1.0;
        y = x;
        if (gm <= gm_tol) break;
        continue;
      }
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      for (std::size_t i = 0; i < l; ++i) y[i] = xn[i] + ((t - 1.0) / tn) * (xn[i] - x[i]);
      t = tn;
      x = xn;
      fx = fn;
      wk.lip *= 0.95;
      if (gm <= gm_tol) break;
    }
    wk.theta = x;
    return it;
  }

  // Newton steps on the support of theta with alpha states held fixed.
  int newton(Work& wk, int max_steps) const {
    const std::size_t l = wk.l;
    int steps = 0;
    for (; steps < max_steps; ++steps) {
      evaluate(wk, true);
      std::array<std::size_t, kMaxIntervals> sup{};
      std::size_t ns = 0;
      for (std::size_t i = 0; i < l; ++i)
        if (wk.theta[i] > 0.0) sup[ns++] = i;
      if (ns <= 1) return steps;
      // H = (1/tau) E^T diag(omega) E with E_{ji} = dw_j/dtheta_i
      using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxIntervals + 1,
                                kMaxIntervals + 1>;
      using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxIntervals + 1, 1>;
      Mat kkt = Mat::Zero(static_cast<Eigen::Index>(ns + 1), static_cast<Eigen::Index>(ns + 1));
      Vec rhs = Vec::Zero(static_cast<Eigen::Index>(ns + 1));
      for (std::size_t j = 0; j < l; ++j) {
        if (wk.omega[j] == 0.0) continue;
        for (std::size_t a = 0; a < ns; ++a) {
          const std::size_t ia = sup[a];
          const double ea = ia > j ? 1.0 : (ia == j ? wk.alpha[j] : 0.0);
          if (ea == 0.0) continue;
          for (std::size_t b = 0; b < ns; ++b) {
            const std::size_t ib = sup[b];
            const double eb = ib > j ? 1.0 : (ib == j ? wk.alpha[j] : 0.0);
            kkt(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +=
                wk.omega[j] * ea * eb / wk.tau;
          }
        }
      }
      for (std::size_t a = 0; a < ns; ++a) {
        const auto ia = static_cast<Eigen::Index>(a);
        kkt(ia, static_cast<Eigen::Index>(ns)) = 1.0;
        kkt(static_cast<Eigen::Index>(ns), ia) = 1.0;
        rhs(ia) = -wk.grad[sup[a]];
      }
      Vec sol = kkt.completeOrthogonalDecomposition().solve(rhs);
      std::array<double, kMaxIntervals> d{}, pg{};
      double slope = 0.0, gmean = 0.0, dn = 0.0, pgn = 0.0;
      for (std::size_t a = 0; a < ns; ++a) {
        d[sup[a]] = sol(static_cast<Eigen::Index>(a));
        if (!std::isfinite(d[sup[a]])) return steps;
        slope += wk.grad[sup[a]] * d[sup[a]];
        dn += d[sup[a]] * d[sup[a]];
        gmean += wk.grad[sup[a]] / static_cast<double>(ns);
      }
      for (std::size_t a = 0; a < ns; ++a) {
        pg[sup[a]] = gmean - wk.grad[sup[a]];
        pgn += pg[sup[a]] * pg[sup[a]];
      }
      // face-stationary to rounding: nothing left for Newton to do
      if (std::sqrt(pgn) * wk.tau <= 1e-15) return steps;
      if (try_step(wk, d, sup, ns)) continue;
      // the objective is linear along part of the face (singular Hessian):
      // fall back to steepest descent with an exact line search
      if (!(slope < -1e-12 * std::sqrt(dn * pgn))) d = pg;
      const double f0 = wk.value;
      const double tmax = max_step(wk, d, sup, ns);
      const double t = line_search(wk, d, tmax);
      if (!(t > 0.0)) return steps;
      const auto saved = wk.theta;
      move(wk, d, t, tmax, sup, ns);
      evaluate(wk, false);
      if (!(wk.value <= f0)) {
        wk.theta = saved;
        return steps;
      }
    }
    return steps;
  }

  double max_step(const Work& wk, const std::array<double, kMaxIntervals>& d,
                  const std::array<std::size_t, kMaxIntervals>& sup, std::size_t ns) const {
    double tmax = kInf;
    for (std::size_t a = 0; a < ns; ++a)
      if (d[sup[a]] < 0.0) tmax = std::min(tmax, -wk.theta[sup[a]] / d[sup[a]]);
    return tmax;
  }

  void move(Work& wk, const std::array<double, kMaxIntervals>& d, double t, double tmax,
            const std::array<std::size_t, kMaxIntervals>& sup, std::size_t ns) const {
    const auto saved = wk.theta;
    for (std::size_t a = 0; a < ns; ++a) {
      const std::size_t ia = sup[a];
      wk.theta[ia] = std::max(saved[ia] + t * d[ia], 0.0);
      if (t >= tmax && d[ia] < 0.0 && -saved[ia] / d[ia] <= tmax) wk.theta[ia] = 0.0;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < wk.l; ++i) sum += wk.theta[i];
    for (std::size_t i = 0; i < wk.l; ++i) wk.theta[i] /= sum;
  }

  // Damped Newton step: halve from the full (or boundary) step until the
  // objective does not increase.
  bool try_step(Work& wk, const std::array<double, kMaxIntervals>& d,
                const std::array<std::size_t, kMaxIntervals>& sup, std::size_t ns) const {
    double dmax = 0.0;
    for (std::size_t a = 0; a < ns; ++a) dmax = std::max(dmax, std::abs(d[sup[a]]));
    if (dmax < 1e-15) return false;
    const double tmax = max_step(wk, d, sup, ns);
    const double f0 = wk.value;
    const auto saved = wk.theta;
    for (double t = std::min(1.0, tmax); t > 1e-6; t *= 0.5) {
      move(wk, d, t, tmax, sup, ns);
      evaluate(wk, false);
      if (wk.value <= f0 + 1e-15 * (1.0 + std::abs(f0))) return true;
      wk.theta = saved;
    }
    evaluate(wk, true);
    return false;
  }

  // Exact minimization of the convex, piecewise quadratic restriction
  // phi(t) = P(theta + t d) on [0, tmax] from the sign of phi'(t).
  double line_search(const Work& wk, const std::array<double, kMaxIntervals>& d,
                     double tmax) const {
    Work probe = wk;
    auto dphi = [&](double t) {
      for (std::size_t i = 0; i < wk.l; ++i) probe.theta[i] = std::max(wk.theta[i] + t * d[i], 0.0);
      evaluate(probe, true);
      double s = 0.0;
      for (std::size_t i = 0; i < wk.l; ++i) s += probe.grad[i] * d[i];
      return s;
    };
    double lo = 0.0, hi = std::min(1.0, tmax);
    double flo = dphi(lo), fhi = dphi(hi);
    if (flo >= 0.0) return 0.0;
    while (fhi < 0.0) {
      if (hi >= tmax) return tmax;
      lo = hi;
      flo = fhi;
      hi = std::min(2.0 * hi, tmax);
      fhi = dphi(hi);
    }
    // Illinois regula falsi, bisection as a safeguard
    int side = 0;
    for (int it = 0; it < 100 && hi - lo > 1e-16 * hi; ++it) {
      double t = (lo * fhi - hi * flo) / (fhi - flo);
      if (!(t > lo && t < hi)) t = 0.5 * (lo + hi);
      const double ft = dphi(t);
      if (ft == 0.0) return t;
      if (ft < 0.0) {
        lo = t;
        flo = ft;
        if (side == -1) fhi *= 0.5;
        side = -1;
      } else {
        hi = t;
        fhi = ft;
        if (side == 1) flo *= 0.5;
        side = 1;
      }
    }
    return 0.5 * (lo + hi);
  }

  // Optimality residual on the simplex: length of the projected gradient step
  // theta - P(theta - tau grad), which is on the scale of the lifted point
  // (the Hessian is about E^T E / tau). Tiny weights whose gradient pushes
  // them out of the support do not count, unlike a spread over the support.
  double kkt(Work& wk) const {
    evaluate(wk, true);
    std::array<double, kMaxIntervals> x{};
    for (std::size_t i = 0; i < wk.l; ++i) x[i] = wk.theta[i] - wk.tau * wk.grad[i];
    project_simplex(std::span<double>(x.data(), wk.l));
    double resid = 0.0;
    for (std::size_t i = 0; i < wk.l; ++i) resid = std::max(resid, std::abs(x[i] - wk.theta[i]));
    return resid;
  }
};

}  // namespace liftbreg
