#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "liftbreg/dataterms.hpp"
#include "liftbreg/envelope.hpp"
#include "liftbreg/error.hpp"
#include "liftbreg/grid.hpp"
#include "liftbreg/labels.hpp"
#include "liftbreg/pdhg.hpp"
#include "liftbreg/projections.hpp"

namespace liftbreg {

enum class NonIntegralPolicy { unlift_and_continue, abort };

struct BregmanConfig {
  int steps = 5;
  TvKind tv = TvKind::an;
  bool transform_subgradients = true;
  SolverConfig solver;
  double integrality_tol = 1e-3;
  NonIntegralPolicy non_integral_policy = NonIntegralPolicy::unlift_and_continue;
  double abort_fraction = 0.5;

  void validate() const {
    if (steps < 1) throw InputError("need at least one Bregman step");
    if (!(integrality_tol > 0.0)) throw InputError("integrality tolerance must be positive");
  }
};

struct BregmanStep {
  ScalarField u;        // unlifted (lifted path) or plain iterate
  LiftedField lifted;   // lifted path only
  DualField q;          // dual after the optional transform
  LiftedField p;        // grad^T q
  ScalarField p_closed; // classical path: p_{k-1} - lambda (u_k - f)
  double energy = 0.0;
  double data_residual = std::nan("");
  double tv = 0.0;
  double non_integral_fraction = 0.0;
  int solver_iterations = 0;
  bool converged = false;
};

struct BregmanTrace {
  std::vector<BregmanStep> steps;
};

/// Scalar TV of a field with unit-radius constraints.
inline double scalar_tv(const ScalarField& u, TvKind tv) {
  return lifted_tv(as_lifted(u), LabelSet({0.0, 1.0}), tv);
}

inline double l2_distance(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (std::size_t p = 0; p < a.values.size(); ++p)
    s += (a.values[p] - b.values[p]) * (a.values[p] - b.values[p]);
  return std::sqrt(s);
}

inline LiftedField extract_subgradient(const DualField& q) { return divergence_adjoint(q); }

inline ScalarField unlift_field(const LiftedField& u, const LabelSet& labels) {
  ScalarField out(u.shape);
  for (std::size_t p = 0; p < u.shape.pixels(); ++p) out.values[p] = unlift(u.pixel(p), labels);
  return out;
}

inline double non_integral_fraction(const LiftedField& u, double tol) {
  std::size_t bad = 0;
  for (std::size_t p = 0; p < u.shape.pixels(); ++p)
    if (!check_sublabel_integral(u.pixel(p), tol)) ++bad;
  return static_cast<double>(bad) / static_cast<double>(u.shape.pixels());
}

/// Bregman iteration for ROF with the closed-form subgradient update.
inline BregmanTrace classical_bregman_rof(const Image& f, double lambda,
                                          const BregmanConfig& config) {
  config.validate();
  BregmanTrace trace;
  ScalarField p(f.shape, 0.0);
  std::optional<ScalarSolution> prev;
  for (int k = 1; k <= config.steps; ++k) {
    const ScalarSolution* warm = config.solver.warm_start && prev ? &*prev : nullptr;
    ScalarSolution sol = solve_unlifted_rof(f, lambda, p, config.tv, config.solver, warm);
    BregmanStep st;
    st.u = sol.u;
    st.q = sol.q;
    st.p = extract_subgradient(sol.q);
    for (std::size_t x = 0; x < p.values.size(); ++x)
      p.values[x] -= lambda * (sol.u.values[x] - f.values[x]);
    st.p_closed = p;
    st.energy = sol.diagnostics.energy;
    st.data_residual = l2_distance(sol.u, f);
    st.tv = scalar_tv(sol.u, config.tv);
    st.solver_iterations = sol.diagnostics.iterations;
    st.converged = sol.diagnostics.converged;
    trace.steps.push_back(std::move(st));
    prev = std::move(sol);
  }
  return trace;
}

/// Lifted Bregman iteration. `reference` (optional) is the input image used
/// for the data residual metric.
inline BregmanTrace lifted_bregman(const EnvelopeField& env, const LabelSet& labels,
                                   const GridShape& shape, const BregmanConfig& config,
                                   const Image* reference = nullptr) {
  config.validate();
  BregmanTrace trace;
  DualField q_prev(shape, labels.intervals());
  std::optional<SaddleState> state;
  for (int k = 1; k <= config.steps; ++k) {
    const SaddleState* warm = config.solver.warm_start && state ? &*state : nullptr;
    LiftedSolution sol = solve_lifted_step(env, labels, config.tv, q_prev, config.solver, warm);
    BregmanStep st;
    st.lifted = sol.u;
    st.u = unlift_field(sol.u, labels);
    st.non_integral_fraction = non_integral_fraction(sol.u, config.integrality_tol);
    if (config.non_integral_policy == NonIntegralPolicy::abort &&
        st.non_integral_fraction > config.abort_fraction) {
      throw BregmanAbort("Bregman step " + std::to_string(k) + ": " +
                             std::to_string(100.0 * st.non_integral_fraction) +
                             "% of pixels are not sublabel-integral",
                         k, st.non_integral_fraction);
    }
    st.q = sol.q;
    if (config.transform_subgradients)
      transform_dual_field(st.q, sol.u, labels, config.tv, config.integrality_tol);
    st.p = extract_subgradient(st.q);
    st.energy = sol.diagnostics.energy;
    if (reference) st.data_residual = l2_distance(st.u, *reference);
    st.tv = scalar_tv(st.u, config.tv);
    st.solver_iterations = sol.diagnostics.iterations;
    st.converged = sol.diagnostics.converged;
    q_prev = st.q;
    state = std::move(sol.state);
    trace.steps.push_back(std::move(st));
  }
  return trace;
}

}  // namespace liftbreg
