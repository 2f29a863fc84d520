#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "liftbreg/envelope.hpp"
#include "liftbreg/error.hpp"
#include "liftbreg/grid.hpp"
#include "liftbreg/labels.hpp"
#include "liftbreg/projections.hpp"

namespace liftbreg {

struct SolverConfig {
  int max_iters = 20000;
  double tol = 1e-6;
  double tau = 0.0;    // 0 selects h / (2 sqrt(d))
  double sigma = 0.0;  // likewise
  double theta = 1.0;
  int check_every = 10;
  bool warm_start = true;

  void validate(const GridShape& shape) const {
    if (max_iters <= 0) throw InputError("max_iters must be positive");
    if (!(tol > 0.0)) throw InputError("solver tol must be positive");
    if (tau < 0.0 || sigma < 0.0) throw InputError("step sizes must be positive");
    if (theta < 0.0 || theta > 1.0) throw InputError("theta must lie in [0, 1]");
    if (check_every <= 0) throw InputError("check_every must be positive");
    if (tau > 0.0 && sigma > 0.0) {
      const double bound = 4.0 * static_cast<double>(shape.dims()) / (shape.h * shape.h);
      if (tau * sigma * bound > 1.0 + 1e-12)
        throw InputError("tau * sigma * ||grad||^2 exceeds 1");
    }
  }

  std::pair<double, double> steps(const GridShape& shape) const {
    const double automatic = shape.h / (2.0 * std::sqrt(static_cast<double>(shape.dims())));
    return {tau > 0.0 ? tau : automatic, sigma > 0.0 ? sigma : automatic};
  }
};

/// Iterates of one saddle problem; reused as the warm start of the next.
struct SaddleState {
  LiftedField u;
  LiftedField u_bar;
  DualField q;
  std::vector<double> prox_weights;  // per pixel piece weights for the prox
  int iterations = 0;
  std::vector<double> residuals;
};

struct SolveDiagnostics {
  int iterations = 0;
  double residual = kInf;
  double energy = kInf;
  bool converged = false;
};

struct LiftedSolution {
  LiftedField u;
  DualField q;
  SolveDiagnostics diagnostics;
  SaddleState state;
};

using EnvelopeField = std::vector<Envelope>;

/// Sum over pixels of sup_{q in K} <q, grad u>.
inline double lifted_tv(const LiftedField& u, const LabelSet& labels, TvKind tv) {
  DualField g = gradient(u);
  double s = 0.0;
  for (std::size_t p = 0; p < u.shape.pixels(); ++p) s += K_support(g.pixel(p), g.dims, labels, tv);
  return s;
}

inline double lifted_energy(const LiftedField& u, const EnvelopeField& env, const LabelSet& labels,
                            TvKind tv) {
  double e = 0.0;
  for (std::size_t p = 0; p < u.shape.pixels(); ++p) {
    const double v = env[p].eval(u.pixel(p));
    if (v == kInf) return kInf;
    e += v;
  }
  return e + lifted_tv(u, labels, tv);
}

namespace detail {

// RMS of the two residual blocks, added.
inline double combined_residual(double primal_sq, std::size_t primal_n, double dual_sq,
                                std::size_t dual_n) {
  return std::sqrt(primal_sq / static_cast<double>(primal_n)) +
         std::sqrt(dual_sq / static_cast<double>(dual_n));
}

}  // namespace detail

/// min_u max_{q in K} sum_x rho**_x(u(x)) + <q - q_offset, grad u>.
inline LiftedSolution solve_lifted_step(const EnvelopeField& env, const LabelSet& labels,
                                        TvKind tv, const DualField& q_offset,
                                        const SolverConfig& config,
                                        const SaddleState* warm = nullptr) {
  const GridShape shape = q_offset.shape;
  const std::size_t l = labels.intervals();
  const std::size_t n = shape.pixels();
  if (env.size() != n) throw ModelError("one envelope per pixel required");
  if (q_offset.rows != l) throw ModelError("offset dual has the wrong number of rows");
  config.validate(shape);
  const auto [tau, sigma] = config.steps(shape);

  SaddleState st;
  if (warm && warm->u.shape == shape && warm->u.channels == l) {
    st = *warm;
    st.u_bar = st.u;
    st.iterations = 0;
    st.residuals.clear();
  } else {
    st.u = LiftedField(shape, l);
    // start at the middle of the label range
    for (std::size_t p = 0; p < n; ++p) sublabel_vector({l / 2, l % 2 ? 0.5 : 0.0}, st.u.pixel(p));
    st.u_bar = st.u;
    st.q = DualField(shape, l);
    st.prox_weights.assign(n * l, 0.0);
  }

  LiftedField div_offset = divergence_adjoint(q_offset);
  LiftedField u_old(shape, l), div(shape, l), arg(shape, l);
  DualField grad(shape, l), q_old(shape, l);
  const std::size_t dual_n = q_offset.values.size();

  SolveDiagnostics diag;
  for (int it = 1; it <= config.max_iters; ++it) {
    const bool check = it % config.check_every == 0 || it == config.max_iters;
    if (check) q_old.values = st.q.values;
    gradient_into(st.u_bar, grad);
    for (std::size_t k = 0; k < st.q.values.size(); ++k) st.q.values[k] += sigma * grad.values[k];
    project_K(st.q, labels, tv);

    divergence_adjoint_into(st.q, div);
    u_old.values = st.u.values;
    for (std::size_t k = 0; k < arg.values.size(); ++k)
      arg.values[k] = st.u.values[k] - tau * (div.values[k] - div_offset.values[k]);
    for (std::size_t p = 0; p < n; ++p) {
      env[p].prox_into(arg.pixel(p), tau, st.u.pixel(p),
                       std::span<double>(st.prox_weights.data() + p * l, l));
    }
    const LiftedField& u_bar_old = st.u_bar;
    if (check) {
      // primal: (u_old - u)/tau; dual: (q_old - q)/sigma + grad(u_bar_old - u)
      double ps = 0.0;
      for (std::size_t k = 0; k < st.u.values.size(); ++k) {
        const double r = (u_old.values[k] - st.u.values[k]) / tau;
        ps += r * r;
      }
      LiftedField diff(shape, l);
      for (std::size_t k = 0; k < diff.values.size(); ++k)
        diff.values[k] = u_bar_old.values[k] - st.u.values[k];
      gradient_into(diff, grad);
      double ds = 0.0;
      for (std::size_t k = 0; k < st.q.values.size(); ++k) {
        const double r = (q_old.values[k] - st.q.values[k]) / sigma + grad.values[k];
        ds += r * r;
      }
      diag.residual = detail::combined_residual(ps, st.u.values.size(), ds, dual_n);
      st.residuals.push_back(diag.residual);
      if (!std::isfinite(diag.residual)) throw NumericError("non-finite PDHG iterate");
    }
    for (std::size_t k = 0; k < st.u.values.size(); ++k)
      st.u_bar.values[k] = st.u.values[k] + config.theta * (st.u.values[k] - u_old.values[k]);
    diag.iterations = it;
    if (check && diag.residual <= config.tol) {
      diag.converged = true;
      break;
    }
  }
  st.iterations = diag.iterations;

  // energy of the shifted problem
  diag.energy = lifted_energy(st.u, env, labels, tv) - dot(div_offset.values, st.u.values);
  LiftedSolution out;
  out.u = st.u;
  out.q = st.q;
  out.diagnostics = diag;
  out.state = std::move(st);
  return out;
}

struct ScalarSolution {
  ScalarField u;
  DualField q;  // one row
  SolveDiagnostics diagnostics;
};

/// min_u sum_x (lambda/2)(u - f)^2 + TV(u) - <p_offset, u>, with the same
/// PDHG iteration on a single-row dual.
inline ScalarSolution solve_unlifted_rof(const ScalarField& f, double lambda,
                                         const ScalarField& p_offset, TvKind tv,
                                         const SolverConfig& config,
                                         const ScalarSolution* warm = nullptr) {
  if (!(lambda > 0.0)) throw ModelError("lambda must be positive");
  const GridShape shape = f.shape;
  if (!(p_offset.shape == shape)) throw InputError("offset shape mismatch");
  config.validate(shape);
  const auto [tau, sigma] = config.steps(shape);
  const LabelSet unit({0.0, 1.0});  // radius-1 constraint rows
  const std::size_t n = shape.pixels();

  LiftedField u = as_lifted(f), u_bar(shape, 1), u_old(shape, 1), div(shape, 1);
  DualField q(shape, 1), grad(shape, 1), q_old(shape, 1);
  if (warm && warm->u.shape == shape) {
    u = as_lifted(warm->u);
    q = warm->q;
  }
  u_bar = u;

  SolveDiagnostics diag;
  for (int it = 1; it <= config.max_iters; ++it) {
    const bool check = it % config.check_every == 0 || it == config.max_iters;
    if (check) q_old.values = q.values;
    gradient_into(u_bar, grad);
    for (std::size_t k = 0; k < q.values.size(); ++k) q.values[k] += sigma * grad.values[k];
    project_K(q, unit, tv);
    divergence_adjoint_into(q, div);
    u_old.values = u.values;
    for (std::size_t p = 0; p < n; ++p) {
      const double z = u.values[p] - tau * (div.values[p] - p_offset.values[p]);
      u.values[p] = (z + tau * lambda * f.values[p]) / (1.0 + tau * lambda);
    }
    if (check) {
      double ps = 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        const double r = (u_old.values[p] - u.values[p]) / tau;
        ps += r * r;
      }
      LiftedField diff(shape, 1);
      for (std::size_t p = 0; p < n; ++p) diff.values[p] = u_bar.values[p] - u.values[p];
      gradient_into(diff, grad);
      double ds = 0.0;
      for (std::size_t k = 0; k < q.values.size(); ++k) {
        const double r = (q_old.values[k] - q.values[k]) / sigma + grad.values[k];
        ds += r * r;
      }
      diag.residual = detail::combined_residual(ps, n, ds, q.values.size());
      if (!std::isfinite(diag.residual)) throw NumericError("non-finite PDHG iterate");
    }
    for (std::size_t p = 0; p < n; ++p)
      u_bar.values[p] = u.values[p] + config.theta * (u.values[p] - u_old.values[p]);
    diag.iterations = it;
    if (check && diag.residual <= config.tol) {
      diag.converged = true;
      break;
    }
  }
  double e = lifted_tv(u, unit, tv);
  for (std::size_t p = 0; p < n; ++p) {
    const double r = u.values[p] - f.values[p];
    e += 0.5 * lambda * r * r - p_offset.values[p] * u.values[p];
  }
  diag.energy = e;
  return {as_scalar(u), q, diag};
}

}  // namespace liftbreg
