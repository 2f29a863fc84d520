#pragma once

// Oracle-backed invariant checks shared by the CLI selftest and the
// acceptance run.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "liftbreg/envelope.hpp"
#include "liftbreg/grid.hpp"
#include "liftbreg/labels.hpp"
#include "liftbreg/oracles.hpp"
#include "liftbreg/pdhg.hpp"
#include "liftbreg/projections.hpp"

namespace liftbreg::checks {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline LabelSet random_labels(std::size_t count, double first, std::mt19937& rng) {
  std::uniform_real_distribution<double> gap(0.1, 1.0);
  std::vector<double> g{first};
  for (std::size_t i = 1; i < count; ++i) g.push_back(g.back() + gap(rng));
  return LabelSet(g);
}

/// Worst |env2(u) - env1(u) + <p gtilde, u>| over random quadratic models with
/// rho2 = rho1 - p t, on label sets starting at `first_label`.
inline double additivity_error(int models, int points, double first_label, std::mt19937& rng) {
  std::uniform_real_distribution<double> ua(0.0, 3.0), ub(-2.0, 2.0), up(-2.0, 2.0), u01(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> count(2, 9);
  double worst = 0.0;
  for (int m = 0; m < models; ++m) {
    LabelSet g = random_labels(count(rng), first_label, rng);
    PieceModel m1;
    for (std::size_t i = 0; i < g.intervals(); ++i)
      m1.pieces.push_back(QuadraticPiece{ua(rng), ub(rng), ub(rng)});
    const double p = up(rng);
    PieceModel m2 = m1;
    for (auto& piece : m2.pieces) std::get<QuadraticPiece>(piece).b -= p;
    const Envelope e1 = Envelope::build(m1, g), e2 = Envelope::build(m2, g);
    for (int k = 0; k < points; ++k) {
      std::vector<double> u(g.intervals());
      for (double& x : u) x = u01(rng);
      std::sort(u.begin(), u.end(), std::greater<>());
      double lin = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) lin += p * g.widths()[i] * u[i];
      worst = std::max(worst, std::abs(e2.eval(u) - e1.eval(u) + lin));
    }
  }
  return worst;
}

inline CheckResult check_additivity(std::uint32_t seed) {
  std::mt19937 rng(seed);
  const double err = additivity_error(100, 20, 0.0, rng);
  return {"linear-term-additivity", err <= 1e-8, "max error " + fmt(err)};
}

using AdjointFn = std::function<void(const DualField&, LiftedField&)>;

/// |<grad u, q> - <u, adj q>| relative to |u||q| on random fields.
inline CheckResult check_adjoint(std::uint32_t seed, const AdjointFn& adjoint) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> side(1, 12), chans(1, 5);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    GridShape s(side(rng), side(rng), 0.5 + std::abs(nd(rng)));
    const std::size_t l = chans(rng);
    LiftedField u(s, l), a(s, l);
    DualField q(s, l);
    for (double& x : u.values) x = nd(rng);
    for (double& x : q.values) x = nd(rng);
    DualField g = gradient(u);
    adjoint(q, a);
    const double err = std::abs(dot(g.values, q.values) - dot(u.values, a.values)) /
                       (norm2(u.values) * norm2(q.values));
    worst = std::max(worst, err);
  }
  return {"adjointness", worst <= 1e-12, "max relative error " + fmt(worst)};
}

inline CheckResult check_projections(std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  double idem = 0.0, expand = 0.0, infeas = 0.0;
  for (TvKind tv : {TvKind::iso, TvKind::an}) {
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t l = 1 + trial % 6, d = 1 + trial % 2;
      LabelSet g = random_labels(l + 1, 0.0, rng);
      std::vector<double> a(l * d), b(l * d);
      for (double& x : a) x = nd(rng);
      for (double& x : b) x = nd(rng);
      double dab = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) dab += (a[k] - b[k]) * (a[k] - b[k]);
      project_K(a, d, g, tv);
      project_K(b, d, g, tv);
      auto aa = a;
      project_K(aa, d, g, tv);
      double dp = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        idem = std::max(idem, std::abs(aa[k] - a[k]));
        dp += (a[k] - b[k]) * (a[k] - b[k]);
      }
      expand = std::max(expand, std::sqrt(dp) - std::sqrt(dab));
      infeas = std::max(infeas, K_violation(a, d, g, tv));
    }
  }
  const bool ok = idem <= 1e-14 && expand <= 1e-14 && infeas <= 1e-14;
  return {"projections", ok,
          "idempotence " + fmt(idem) + ", expansion " + fmt(expand) + ", violation " + fmt(infeas)};
}

inline CheckResult check_taut_string(std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  SolverConfig cfg;
  cfg.tol = 1e-8;
  cfg.max_iters = 400000;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    ScalarField f(GridShape(1, 64));
    for (double& v : f.values) v = d(rng);
    const double lambda = 4.0 + 2.0 * trial;
    auto sol = solve_unlifted_rof(f, lambda, ScalarField(f.shape), TvKind::an, cfg);
    auto ref = oracles::taut_string_tv1d(f.values, 1.0 / lambda);
    for (std::size_t i = 0; i < 64; ++i) worst = std::max(worst, std::abs(sol.u.values[i] - ref[i]));
  }
  return {"taut-string", worst <= 1e-4, "max error " + fmt(worst)};
}

struct DualStructureStats {
  std::size_t pixels = 0;
  std::size_t pattern_failures = 0;
  std::size_t transform_failures = 0;
};

/// Random 1D sublabel-integral fields (with some pixels exactly on labels and
/// some flat runs), a maximizer of <q, grad u> over K_an, and the transformed
/// dual. Interior pixels must show the forced rows of the three cases and the
/// transform must give +-gtilde wherever the scalar gradient is nonzero.
inline DualStructureStats dual_structure(int fields, std::mt19937& rng) {
  std::uniform_int_distribution<std::size_t> count(3, 9), len(8, 40);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  DualStructureStats st;
  constexpr double tol = 1e-10;
  for (int f = 0; f < fields; ++f) {
    LabelSet g = random_labels(count(rng), u01(rng) - 0.5, rng);
    const std::size_t l = g.intervals(), n = len(rng);
    std::vector<SublabelIndex> idx(n);
    for (std::size_t m = 0; m < n; ++m) {
      if (m > 0 && u01(rng) < 0.3) {
        idx[m] = idx[m - 1];
        continue;
      }
      idx[m].interval = std::min<std::size_t>(static_cast<std::size_t>(u01(rng) * l), l - 1);
      idx[m].alpha = u01(rng) < 0.2 ? 0.0 : u01(rng);
    }
    GridShape s(1, n);
    LiftedField u(s, l);
    for (std::size_t m = 0; m < n; ++m) sublabel_vector(idx[m], u.pixel(m));
    DualField grad = gradient(u);
    // a maximizer: any feasible start pushed far along the gradient
    DualField q(s, l);
    for (std::size_t m = 0; m < n; ++m)
      for (std::size_t r = 0; r < l; ++r)
        q.at(m, r, 0) = (2.0 * u01(rng) - 1.0) * g.widths()[r] + 1e12 * grad.at(m, r, 0);
    project_K(q, g, TvKind::an);
    DualField qt = q;
    transform_dual_field(qt, u, g, TvKind::an, tol);

    for (std::size_t m = 0; m + 1 < n; ++m) {
      ++st.pixels;
      // canonical representation: an interior label counts as alpha = 0 of
      // the interval above it, as the integrality check reports it
      const SublabelIndex a = *check_sublabel_integral(u.pixel(m), tol);
      const SublabelIndex b = *check_sublabel_integral(u.pixel(m + 1), tol);
      const std::size_t i = a.interval, j = b.interval;
      std::vector<double> forced(l, 0.0);  // +1 / -1 forced sign, 0 free
      if (i < j) {
        for (std::size_t r = i; r <= j; ++r) forced[r] = 1.0;
        if (b.alpha == 0.0) forced[j] = 0.0;
      } else if (i > j) {
        for (std::size_t r = j; r <= i; ++r) forced[r] = -1.0;
        if (a.alpha == 0.0) forced[i] = 0.0;
      } else if (b.alpha != a.alpha) {
        forced[i] = b.alpha > a.alpha ? 1.0 : -1.0;
      }
      for (std::size_t r = 0; r < l; ++r)
        if (forced[r] != 0.0 && std::abs(q.at(m, r, 0) - forced[r] * g.widths()[r]) > tol) {
          ++st.pattern_failures;
          break;
        }
      const double jump = sublabel_value(b, g) - sublabel_value(a, g);
      if (jump != 0.0) {
        const double sign = jump > 0.0 ? 1.0 : -1.0;
        for (std::size_t r = 0; r < l; ++r)
          if (std::abs(qt.at(m, r, 0) - sign * g.widths()[r]) > tol) {
            ++st.transform_failures;
            break;
          }
      }
    }
  }
  return st;
}

inline CheckResult check_dual_structure(std::uint32_t seed) {
  std::mt19937 rng(seed);
  const DualStructureStats st = dual_structure(100, rng);
  const bool ok = st.pattern_failures == 0 && st.transform_failures == 0;
  return {"dual-structure", ok,
          std::to_string(st.pixels) + " pixels, " + std::to_string(st.pattern_failures) +
              " pattern and " + std::to_string(st.transform_failures) + " transform mismatches"};
}

struct SelftestOptions {
  std::uint32_t seed = 1;
  bool wrong_adjoint = false;  // negative control: drop the boundary terms
};

inline std::vector<CheckResult> run_selftest(const SelftestOptions& opt) {
  AdjointFn adjoint = [](const DualField& q, LiftedField& out) { divergence_adjoint_into(q, out); };
  if (opt.wrong_adjoint) {
    adjoint = [](const DualField& q, LiftedField& out) {
      divergence_adjoint_into(q, out);
      // pretend the last column has a forward neighbor
      const GridShape& s = q.shape;
      for (std::size_t r = 0; r < s.height; ++r) {
        const std::size_t p = r * s.width + s.width - 1;
        for (std::size_t c = 0; c < q.rows; ++c) out.at(p, c) -= q.at(p, c, 0) / s.h;
      }
    };
  }
  return {check_additivity(opt.seed), check_adjoint(opt.seed + 1, adjoint),
          check_projections(opt.seed + 2), check_taut_string(opt.seed + 3),
          check_dual_structure(opt.seed + 4)};
}

}  // namespace liftbreg::checks
