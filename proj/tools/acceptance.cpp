// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "liftbreg/bregman.hpp"
#include "liftbreg/oracles.hpp"
#include "liftbreg/selftest.hpp"
#include "liftbreg/synthetic.hpp"

using namespace liftbreg;
using checks::fmt;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail, double seconds) {
  std::printf("[%s] %2d %-30s %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(),
              seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

double max_abs_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t p = 0; p < a.values.size(); ++p) m = std::max(m, std::abs(a.values[p] - b.values[p]));
  return m;
}

BregmanConfig rof_config(bool transform) {
  BregmanConfig c;
  c.steps = 5;
  c.tv = TvKind::an;
  c.transform_subgradients = transform;
  c.solver.tol = 1e-8;
  c.solver.max_iters = 400000;
  return c;
}

struct RofRuns {
  Image f;
  BregmanTrace classical, lifted;
  double seconds = 0.0;
};

RofRuns rof_runs() {
  Timer t;
  RofRuns r{synthetic::two_squares(), {}, {}, 0.0};
  const LabelSet g = LabelSet::uniform(5, 0.0, 1.0);
  r.classical = classical_bregman_rof(r.f, 20.0, rof_config(true));
  r.lifted = lifted_bregman(build_envelopes(rof_model(r.f, 20.0, g), g), g, r.f.shape,
                            rof_config(true), &r.f);
  r.seconds = t.seconds();
  return r;
}

void criterion1(const RofRuns& r) {
  double worst = 0.0;
  std::string per;
  for (std::size_t k = 0; k < 5; ++k) {
    const double d = max_abs_diff(r.lifted.steps[k].u, r.classical.steps[k].u);
    worst = std::max(worst, d);
    per += (k ? " " : "") + fmt(d);
  }
  report(1, "equivalence (transform on)", worst <= 5e-3,
         "max diff per k: " + per + " (<= 5e-3)", r.seconds);
}

void criterion2(const RofRuns& r) {
  Timer t;
  const LabelSet g = LabelSet::uniform(5, 0.0, 1.0);
  auto off = lifted_bregman(build_envelopes(rof_model(r.f, 20.0, g), g), g, r.f.shape,
                            rof_config(false), &r.f);
  double best = 0.0;
  std::string per;
  for (std::size_t k = 0; k < 5; ++k) {
    const double d = max_abs_diff(off.steps[k].u, r.classical.steps[k].u);
    best = std::max(best, d);
    per += (k ? " " : "") + fmt(d);
  }
  report(2, "divergence (transform off)", best > 5e-2, "max diff per k: " + per + " (some > 5e-2)",
         t.seconds());
}

void criterion3() {
  Timer t;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  const double lambda = 8.0;
  BregmanConfig cfg = rof_config(true);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Image f(GridShape(1, 64));
    for (double& v : f.values) v = d(rng);
    auto tr = classical_bregman_rof(f, lambda, cfg);
    std::vector<double> p(64, 0.0), g(64);
    for (const auto& st : tr.steps) {
      for (std::size_t i = 0; i < 64; ++i) g[i] = f.values[i] + p[i] / lambda;
      auto ref = oracles::taut_string_tv1d(g, 1.0 / lambda);
      for (std::size_t i = 0; i < 64; ++i) worst = std::max(worst, std::abs(st.u.values[i] - ref[i]));
      for (std::size_t i = 0; i < 64; ++i) p[i] -= lambda * (ref[i] - f.values[i]);
    }
  }
  report(3, "classical step vs taut string", worst <= 1e-4,
         "max error " + fmt(worst) + " over 50 signals x 5 steps (<= 1e-4)", t.seconds());
}

void criterion4() {
  Timer t;
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  Image f(GridShape(16, 16));
  for (double& v : f.values) v = d(rng);
  BregmanConfig cfg = rof_config(true);
  cfg.steps = 3;
  auto tr = classical_bregman_rof(f, 10.0, cfg);
  double worst = 0.0;
  for (const auto& st : tr.steps)
    for (std::size_t p = 0; p < f.values.size(); ++p)
      worst = std::max(worst, std::abs(st.p.values[p] - st.p_closed.values[p]));
  report(4, "subgradient recursion", worst <= 1e-4, "max error " + fmt(worst) + " (<= 1e-4)",
         t.seconds());
}

void criterion5() {
  Timer t;
  std::mt19937 rng(5);
  const double err = checks::additivity_error(100, 20, 0.0, rng);
  report(5, "linear-term additivity", err <= 1e-8, "max error " + fmt(err) + " (<= 1e-8)",
         t.seconds());
}

void criterion6() {
  Timer t;
  const Image f = synthetic::two_squares();
  SolverConfig cfg;
  cfg.tol = 1e-8;
  cfg.max_iters = 400000;
  std::vector<ScalarField> u;
  for (std::size_t L : {2u, 9u}) {
    const LabelSet g = LabelSet::uniform(L, 0.0, 1.0);
    auto sol = solve_lifted_step(build_envelopes(rof_model(f, 20.0, g), g), g, TvKind::an,
                                 DualField(f.shape, g.intervals()), cfg, nullptr);
    u.push_back(unlift_field(sol.u, g));
  }
  const double d = max_abs_diff(u[0], u[1]);
  report(6, "label-count independence", d <= 1e-2, "L=2 vs L=9 max diff " + fmt(d) + " (<= 1e-2)",
         t.seconds());
}

void criterion7() {
  Timer t;
  std::mt19937 rng(7);
  const auto st = checks::dual_structure(100, rng);
  report(7, "dual structure", st.pattern_failures == 0 && st.transform_failures == 0,
         std::to_string(st.pixels) + " pixels, " + std::to_string(st.pattern_failures) +
             " pattern / " + std::to_string(st.transform_failures) + " transform mismatches",
         t.seconds());
}

void criterion8(const RofRuns& r) {
  bool ok = true;
  std::string detail;
  for (const auto* tr : {&r.classical, &r.lifted}) {
    std::string seq;
    for (std::size_t k = 0; k < tr->steps.size(); ++k) {
      const double d = l2_distance(tr->steps[k].u, r.f);
      seq += (k ? " " : "") + fmt(d);
      if (k > 0 && d > l2_distance(tr->steps[k - 1].u, r.f) + 1e-6) ok = false;
    }
    detail += (tr == &r.classical ? "classical " : "; lifted ") + seq;
  }
  report(8, "residual monotonicity", ok, detail, 0.0);
}

void criterion9() {
  Timer t;
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> a(0.0, 3.0), b(-2.0, 2.0), v(0.0, 2.0), u01(0.0, 1.0),
      ut(-0.3, 1.3), tau(0.05, 2.0);
  const oracles::GridOracleConfig gcfg;
  const double spacing = 1.0 / static_cast<double>(gcfg.resolution - 1);
  double eval_err = 0.0, prox_err = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const LabelSet g = LabelSet::uniform(2 + trial % 2, 0.0, 1.0);
    PieceModel m;
    if (trial % 2 == 0) {
      for (std::size_t i = 0; i < g.intervals(); ++i) m.pieces.push_back(QuadraticPiece{a(rng), b(rng), b(rng)});
    } else {
      double left = v(rng);
      for (std::size_t i = 0; i < g.intervals(); ++i) {
        SampledPiece s{{left}};
        for (int k = 0; k < 4; ++k) s.values.push_back(v(rng));
        left = s.values.back();
        m.pieces.push_back(s);
      }
    }
    const Envelope env = Envelope::build(m, g);
    std::vector<double> u(g.intervals());
    for (double& x : u) x = u01(rng);
    std::sort(u.begin(), u.end(), std::greater<>());
    eval_err = std::max(eval_err, std::abs(env.eval(u) - oracles::grid_biconjugate(m, g, u)));
    for (double& x : u) x = ut(rng);
    const double t_ = tau(rng);
    const auto w = env.prox(u, t_);
    const auto ref = oracles::grid_prox_oracle(env, u, t_, gcfg);
    for (std::size_t i = 0; i < u.size(); ++i) prox_err = std::max(prox_err, std::abs(w[i] - ref[i]));
  }
  report(9, "envelope/prox vs grid oracles", eval_err <= 1e-3 && prox_err <= spacing,
         "eval error " + fmt(eval_err) + " (<= 1e-3), prox error " + fmt(prox_err) + " (<= " +
             fmt(spacing) + ")",
         t.seconds());
}

struct StereoRun {
  BregmanTrace trace;
  double mae = 0.0;
  double seconds = 0.0;
};

StereoRun stereo_run() {
  Timer t;
  const auto pair = synthetic::stereo_pair();
  const LabelSet g = LabelSet::uniform(5, 0.0, 3.0);
  StereoConfig scfg;  // patch radius 1, beta 0.1
  scfg.lambda = 20.0;
  BregmanConfig cfg;
  cfg.steps = 10;
  cfg.tv = TvKind::iso;
  cfg.transform_subgradients = false;
  cfg.solver.tol = 1e-6;
  cfg.solver.max_iters = 20000;
  StereoRun r;
  r.trace = lifted_bregman(build_envelopes(stereo_model(pair.left, pair.right, g, scfg), g), g,
                           pair.left.shape, cfg);
  const auto& u = r.trace.steps.back().u.values;
  for (std::size_t p = 0; p < u.size(); ++p) r.mae += std::abs(u[p] - pair.disparity.values[p]);
  r.mae /= static_cast<double>(u.size());
  r.seconds = t.seconds();
  return r;
}

void criterion10(const StereoRun& r) {
  const double tv1 = r.trace.steps.front().tv, tv10 = r.trace.steps.back().tv;
  report(10, "synthetic stereo", r.mae <= 0.5 && tv1 <= tv10 && r.seconds <= 600.0,
         "MAE " + fmt(r.mae) + " px (<= 0.5), TV(u1) " + fmt(tv1) + " <= TV(u10) " + fmt(tv10) +
             ", runtime <= 600 s",
         r.seconds);
}

void criterion11(const StereoRun& r, const RofRuns& rof) {
  std::string iso;
  for (std::size_t k = 0; k < r.trace.steps.size(); ++k)
    iso += (k ? " " : "") + fmt(r.trace.steps[k].non_integral_fraction);
  double worst = 0.0;
  std::string an;
  for (std::size_t k = 0; k < rof.lifted.steps.size(); ++k) {
    worst = std::max(worst, rof.lifted.steps[k].non_integral_fraction);
    an += (k ? " " : "") + fmt(rof.lifted.steps[k].non_integral_fraction);
  }
  report(11, "non-integral diagnostics", worst <= 0.01 && r.trace.steps.size() == 10,
         "stereo iso per k: " + iso + "; ROF an per k: " + an + " (<= 0.01)", 0.0);
}

}  // namespace

int main() {
  const RofRuns rof = rof_runs();
  criterion1(rof);
  criterion2(rof);
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8(rof);
  criterion9();
  const StereoRun stereo = stereo_run();
  criterion10(stereo);
  criterion11(stereo, rof);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
