#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "liftbreg/envelope.hpp"
#include "liftbreg/oracles.hpp"

using namespace liftbreg;

namespace {

PieceModel quadratic_model(const LabelSet& g, double a, double b, double c) {
  PieceModel m;
  for (std::size_t i = 0; i < g.intervals(); ++i) m.pieces.push_back(QuadraticPiece{a, b, c});
  return m;
}

PieceModel random_quadratic_model(const LabelSet& g, std::mt19937& rng) {
  std::uniform_real_distribution<double> ua(0.0, 3.0), ub(-2.0, 2.0), uc(-1.0, 1.0);
  PieceModel m;
  for (std::size_t i = 0; i < g.intervals(); ++i)
    m.pieces.push_back(QuadraticPiece{ua(rng), ub(rng), uc(rng)});
  return m;
}

// Non-convex, continuous across labels.
PieceModel random_sampled_model(const LabelSet& g, std::size_t n, std::mt19937& rng) {
  std::uniform_real_distribution<double> uv(0.0, 2.0);
  PieceModel m;
  double left = uv(rng);
  for (std::size_t i = 0; i < g.intervals(); ++i) {
    SampledPiece s;
    s.values.push_back(left);
    for (std::size_t k = 1; k < n; ++k) s.values.push_back(uv(rng));
    left = s.values.back();
    m.pieces.push_back(s);
  }
  return m;
}

std::vector<double> random_hull_point(std::size_t l, std::mt19937& rng) {
  // sorted uniforms give a point of {1 >= w_1 >= ... >= w_l >= 0}
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(l);
  for (double& x : w) x = u(rng);
  std::sort(w.begin(), w.end(), std::greater<>());
  return w;
}

// Euclidean projection onto {1 >= w_1 >= ... >= w_l >= 0}: antitone
// regression by pooling adjacent violators, then clipping to [0, 1].
std::vector<double> project_monotone(std::vector<double> u) {
  std::vector<double> val, wt;
  std::vector<std::size_t> len;
  for (double x : u) {
    val.push_back(x);
    wt.push_back(1.0);
    len.push_back(1);
    while (val.size() > 1 && val[val.size() - 2] < val.back()) {
      const double w = wt[wt.size() - 2] + wt.back();
      const double v = (val[val.size() - 2] * wt[wt.size() - 2] + val.back() * wt.back()) / w;
      const std::size_t n = len[len.size() - 2] + len.back();
      val.pop_back();
      wt.pop_back();
      len.pop_back();
      val.back() = v;
      wt.back() = w;
      len.back() = n;
    }
  }
  std::vector<double> out;
  for (std::size_t b = 0; b < val.size(); ++b)
    for (std::size_t k = 0; k < len[b]; ++k) out.push_back(std::clamp(val[b], 0.0, 1.0));
  return out;
}

double fenchel_young_gap(const Envelope& env, std::span<const double> u,
                         std::span<const double> w, double tau) {
  std::vector<double> v(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) v[i] = (u[i] - w[i]) / tau;
  double inner = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) inner += v[i] * w[i];
  return env.eval(w) + env.conjugate(v) - inner;
}

}  // namespace

TEST(Envelope, QuadraticReproducedAtSublabelPoint) {
  LabelSet g({-1.0, 0.0, 1.0});
  Envelope env = Envelope::build(quadratic_model(g, 1.0, 0.0, 0.0), g);
  EXPECT_NEAR(env.eval(std::vector<double>{0.5, 0.0}), 0.25, 1e-12);
}

TEST(Envelope, DoubleWellAtMixedPoint) {
  LabelSet g({0.0, 0.5, 1.0});
  PieceModel m;
  m.pieces = {SampledPiece{{1.0, 0.0}}, SampledPiece{{0.0, 1.0}}};
  Envelope env = Envelope::build(m, g);
  const std::vector<double> u{0.5, 0.5};
  const double oracle = oracles::grid_biconjugate(m, g, u);
  EXPECT_NEAR(oracle, 1.0, 1e-9);
  EXPECT_NEAR(env.eval(u), oracle, 1e-10);
  // middle label is the cheapest point
  EXPECT_NEAR(env.eval(std::vector<double>{1.0, 0.0}), 0.0, 1e-12);
  EXPECT_NEAR(env.eval(std::vector<double>{0.75, 0.25}), 0.5, 1e-10);
}

TEST(Envelope, OutsideHullIsInfinite) {
  LabelSet g = LabelSet::uniform(3, 0.0, 1.0);
  Envelope env = Envelope::build(quadratic_model(g, 1.0, 0.0, 0.0), g);
  EXPECT_EQ(env.eval(std::vector<double>{1.5, 0.0}), kInf);
  EXPECT_EQ(env.eval(std::vector<double>{0.2, 0.5}), kInf);
  EXPECT_EQ(env.eval(std::vector<double>{0.2, -0.1}), kInf);
}

TEST(Envelope, SublabelAccuracyForConvexPieces) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    LabelSet g = LabelSet::uniform(2 + trial % 8, -1.0, 2.0);
    std::uniform_real_distribution<double> ua(0.0, 3.0), ub(-2.0, 2.0);
    // one quadratic over the whole range, so rho itself is convex
    PieceModel m = quadratic_model(g, ua(rng), ub(rng), ub(rng));
    Envelope env = Envelope::build(m, g);
    for (std::size_t i = 0; i < g.intervals(); ++i)
      for (int k = 0; k <= 100; ++k) {
        SublabelIndex idx{i, k / 100.0};
        const double t = sublabel_value(idx, g);
        EXPECT_NEAR(env.eval(sublabel_vector(idx, g)), m.value(i, t, g), 1e-8);
      }
  }
}

TEST(Envelope, LowerBoundAtSublabelPoints) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> a(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    LabelSet g = LabelSet::uniform(2 + trial % 5, 0.0, 3.0);
    PieceModel m = random_sampled_model(g, 2 + trial % 4, rng);
    Envelope env = Envelope::build(m, g);
    SublabelIndex idx{static_cast<std::size_t>(trial) % g.intervals(), a(rng)};
    const double t = sublabel_value(idx, g);
    EXPECT_LE(env.eval(sublabel_vector(idx, g)), m.value(idx.interval, t, g) + 1e-12);
  }
}

TEST(Envelope, MatchesGridBiconjugateOracle) {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    LabelSet g = LabelSet::uniform(2 + trial % 2, 0.0, 1.0);
    PieceModel m = trial % 3 == 0 ? random_quadratic_model(g, rng)
                                  : random_sampled_model(g, 2 + trial % 5, rng);
    Envelope env = Envelope::build(m, g);
    auto u = random_hull_point(g.intervals(), rng);
    EXPECT_NEAR(env.eval(u), oracles::grid_biconjugate(m, g, u), 1e-3) << trial;
  }
}

TEST(Envelope, AdditivityOfLinearTerm) {
  std::mt19937 rng(123);
  std::uniform_real_distribution<double> up(-2.0, 2.0), lo(-1.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const double g0 = lo(rng);
    LabelSet g = LabelSet::uniform(2 + trial % 6, g0, g0 + 1.5);
    PieceModel m1 = random_quadratic_model(g, rng);
    const double p = up(rng);
    PieceModel m2 = m1;
    for (auto& piece : m2.pieces) std::get<QuadraticPiece>(piece).b -= p;
    Envelope e1 = Envelope::build(m1, g), e2 = Envelope::build(m2, g);
    for (int k = 0; k < 20; ++k) {
      auto u = random_hull_point(g.intervals(), rng);
      // h(t) = p t lifts to p g_1 + <p gamma~, u>
      double lin = p * g.front();
      for (std::size_t i = 0; i < u.size(); ++i) lin += p * g.widths()[i] * u[i];
      EXPECT_NEAR(e2.eval(u), e1.eval(u) - lin, 1e-8);
    }
  }
}

TEST(Envelope, BuildRejectsBadModels) {
  LabelSet g = LabelSet::uniform(3, 0.0, 1.0);
  EXPECT_THROW(Envelope::build(quadratic_model(g, -1.0, 0.0, 0.0), g), ModelError);
  PieceModel short_model;
  short_model.pieces = {QuadraticPiece{}};
  EXPECT_THROW(Envelope::build(short_model, g), ModelError);
  PieceModel one_sample;
  one_sample.pieces = {SampledPiece{{1.0}}, SampledPiece{{1.0, 2.0}}};
  EXPECT_THROW(Envelope::build(one_sample, g), ModelError);
}

TEST(EnvelopeProx, ZeroDataTermProjectsOntoHull) {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> d(-0.5, 1.5);
  for (int trial = 0; trial < 100; ++trial) {
    LabelSet g = LabelSet::uniform(2 + trial % 7, 0.0, 1.0);
    Envelope env = Envelope::build(quadratic_model(g, 0.0, 0.0, 0.0), g);
    std::vector<double> u(g.intervals());
    for (double& x : u) x = d(rng);
    auto w = env.prox(u, 0.7);
    auto ref = project_monotone(u);
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(w[i], ref[i], 1e-9) << trial;
  }
}

TEST(EnvelopeProx, SmallStepReturnsArgument) {
  LabelSet g = LabelSet::uniform(5, 0.0, 1.0);
  PieceModel m;
  for (std::size_t i = 0; i < 4; ++i) {
    const double g0 = g[i];
    // (lambda/2)(t - f)^2 with lambda = 20, f = 0.37
    m.pieces.push_back(QuadraticPiece{10.0, -20.0 * 0.37, 10.0 * 0.37 * 0.37});
    (void)g0;
  }
  Envelope env = Envelope::build(m, g);
  const std::vector<double> u{0.9, 0.6, 0.3, 0.1};
  auto w = env.prox(u, 1e-9);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(w[i], u[i], 1e-6);
}

TEST(EnvelopeProx, MatchesGridOracle) {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> d(-0.3, 1.3), dt(0.05, 2.0);
  for (int trial = 0; trial < 40; ++trial) {
    LabelSet g = LabelSet::uniform(2 + trial % 2, 0.0, 1.0);
    PieceModel m = trial % 2 == 0 ? random_quadratic_model(g, rng)
                                  : random_sampled_model(g, 2 + trial % 4, rng);
    Envelope env = Envelope::build(m, g);
    std::vector<double> u(g.intervals());
    for (double& x : u) x = d(rng);
    const double tau = dt(rng);
    auto w = env.prox(u, tau);
    auto ref = oracles::grid_prox_oracle(env, u, tau);
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(w[i], ref[i], 1e-2) << trial;
    // the zoomed oracle is far finer than one grid cell
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(w[i], ref[i], 1e-5) << trial;
  }
}

TEST(EnvelopeProx, OptimalityInHigherDimensions) {
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> d(-0.5, 1.5), dt(0.01, 3.0);
  for (int trial = 0; trial < 300; ++trial) {
    LabelSet g = LabelSet::uniform(2 + trial % 9, -1.0, 1.0);
    PieceModel m = trial % 2 == 0 ? random_quadratic_model(g, rng)
                                  : random_sampled_model(g, 2 + trial % 5, rng);
    Envelope env = Envelope::build(m, g);
    std::vector<double> u(g.intervals());
    for (double& x : u) x = d(rng);
    const double tau = dt(rng);
    std::vector<double> w(u.size()), weights(u.size(), 0.0);
    ProxStats st = env.prox_into(u, tau, w, weights);
    EXPECT_LE(st.kkt_residual, 1e-12) << trial;
    EXPECT_LE(std::abs(fenchel_young_gap(env, u, w, tau)), 1e-8) << trial;
    // warm start from a perturbed weight vector reaches the same point
    std::vector<double> w2(u.size()), weights2(u.size(), 1.0);
    env.prox_into(u, tau, w2, weights2);
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(w2[i], w[i], 1e-8) << trial;
  }
}

TEST(EnvelopeProx, RejectsNonPositiveStep) {
  LabelSet g = LabelSet::uniform(3, 0.0, 1.0);
  Envelope env = Envelope::build(quadratic_model(g, 1.0, 0.0, 0.0), g);
  EXPECT_THROW(env.prox(std::vector<double>{0.5, 0.2}, 0.0), ModelError);
}

// Sampled cost from the stereo model whose pieces are linear on long
// stretches: the piece-weight objective is flat along a face there.
TEST(EnvelopeProx, WarmAndColdStartAgreeOnPiecewiseLinearModel) {
  const LabelSet g = LabelSet::uniform(5, 0.0, 3.0);
  const double e1 = 0.12917307646401774, e2 = 0.14640642915447982;
  const double e3 = 0.16908928299740922, e4 = 0.17658947464994948;
  PieceModel m;
  m.pieces = {SampledPiece{{0.14161136825705375, 0.13049678821213498, 0.1256229019291023, e1}},
              SampledPiece{{e1, 0.13488113015253478, e1 + (e2 - e1) * 2 / 3 + 0.001, e2}},
              SampledPiece{{e2, 0.15318779725301612, 0.16007641300258751, e3}},
              SampledPiece{{e3, e3 + (e4 - e3) / 3 + 0.001, e3 + (e4 - e3) * 2 / 3 + 0.001, e4}}};
  const Envelope env = Envelope::build(m, g);
  const std::vector<double> u{0.91335728662158189, 0.38601506629151505, 0.34455164093204904,
                              0.2949357729008778};
  std::vector<double> warm_w{0.60485909990512055, 0.024216075496814114, 0.084147407092863988,
                             0.28677741750520136};
  std::vector<double> cold_w(4, 0.0), warm(4), cold(4);
  const double tau = 0.35355339059327373;
  const auto sw = env.prox_into(u, tau, warm, warm_w);
  const auto sc = env.prox_into(u, tau, cold, cold_w);
  EXPECT_LE(sw.kkt_residual, 1e-12);
  EXPECT_LE(sc.kkt_residual, 1e-12);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(warm[i], cold[i], 1e-8);
}
