#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "liftbreg/dataterms.hpp"
#include "liftbreg/synthetic.hpp"

using namespace liftbreg;

namespace {

Image random_image(std::size_t h, std::size_t w, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image im{GridShape(h, w)};
  for (double& v : im.values) v = u(rng);
  return im;
}

// I2(r, c) = I1(r, c + s), clamped at the right border
Image shift_columns(const Image& i1, std::size_t s) {
  Image out(i1.shape);
  for (std::size_t r = 0; r < i1.shape.height; ++r)
    for (std::size_t c = 0; c < i1.shape.width; ++c)
      out(r, c) = i1(r, std::min(c + s, i1.shape.width - 1));
  return out;
}

}  // namespace

TEST(RofModel, PieceValues) {
  LabelSet g = LabelSet::uniform(3, 0.0, 1.0);
  Image f(GridShape(1, 2));
  f[0] = 0.25;
  f[1] = 0.0;
  auto m = rof_model(f, 2.0, g);
  EXPECT_DOUBLE_EQ(m[0].value(0, 0.25, g), 0.0);
  EXPECT_DOUBLE_EQ(m[1].value(1, 1.0, g), 1.0);
}

TEST(RofModel, PiecesAreConvex) {
  std::mt19937 rng(3);
  Image f = random_image(4, 5, rng);
  LabelSet g = LabelSet::uniform(5, 0.0, 1.0);
  for (const auto& m : rof_model(f, 7.5, g))
    for (const auto& piece : m.pieces) EXPECT_GT(std::get<QuadraticPiece>(piece).a, 0.0);
}

TEST(RofModel, EnvelopeIsSublabelAccurate) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0), lam(0.5, 30.0);
  for (int trial = 0; trial < 100; ++trial) {
    LabelSet g = LabelSet::uniform(2 + trial % 6, 0.0, 1.0);
    Image f(GridShape(1, 1), u(rng));
    const double lambda = lam(rng);
    Envelope env = Envelope::build(rof_model(f, lambda, g)[0], g);
    const double t = u(rng);
    auto lifted = lift(t, g);
    EXPECT_NEAR(env.eval(lifted.vector), 0.5 * lambda * (t - f[0]) * (t - f[0]), 1e-9) << trial;
  }
}

TEST(RofModel, RejectsNonPositiveLambda) {
  LabelSet g = LabelSet::uniform(3, 0.0, 1.0);
  Image f(GridShape(2, 2), 0.5);
  EXPECT_THROW(rof_model(f, 0.0, g), ModelError);
  EXPECT_THROW(rof_model(f, -1.0, g), ModelError);
}

TEST(ImageDerivatives, ConstantImage) {
  Image im(GridShape(5, 6), 0.3);
  auto d = image_derivatives(im);
  for (double v : d.d_row.values) EXPECT_EQ(v, 0.0);
  for (double v : d.d_col.values) EXPECT_EQ(v, 0.0);
}

TEST(ImageDerivatives, HorizontalRamp) {
  const std::size_t W = 8;
  Image im(GridShape(3, W));
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < W; ++c) im(r, c) = static_cast<double>(c) / W;
  auto d = image_derivatives(im);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c + 1 < W; ++c) EXPECT_NEAR(d.d_col(r, c), 1.0 / W, 1e-15);
    EXPECT_EQ(d.d_col(r, W - 1), 0.0);
    for (std::size_t c = 0; c < W; ++c) EXPECT_EQ(d.d_row(r, c), 0.0);
  }
}

TEST(ImageDerivatives, CommuteWithIntegerShift) {
  std::mt19937 rng(5);
  Image i1 = random_image(6, 12, rng);
  const std::size_t s = 3;
  auto d1 = image_derivatives(i1);
  auto ds = image_derivatives(shift_columns(i1, s));
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c + s + 1 < 12; ++c) {
      EXPECT_DOUBLE_EQ(ds.d_col(r, c), d1.d_col(r, c + s));
      EXPECT_DOUBLE_EQ(ds.d_row(r, c), d1.d_row(r, c + s));
    }
}

TEST(StereoCost, IdenticalImagesAtZeroShift) {
  std::mt19937 rng(2);
  Image im = random_image(7, 9, rng);
  StereoCost cost(im, im, StereoConfig{});
  for (std::size_t r = 0; r < 7; ++r)
    for (std::size_t c = 0; c < 9; ++c) EXPECT_EQ(cost(r, c, 0.0), 0.0);
}

TEST(StereoCost, TruncationBound) {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> t(0.0, 3.0);
  Image a = random_image(9, 9, rng), b = random_image(9, 9, rng);
  StereoConfig cfg;
  cfg.patch_radius = 2;
  cfg.beta = 0.05;
  StereoCost cost(a, b, cfg);
  for (std::size_t r = 0; r < 9; ++r)
    for (std::size_t c = 0; c < 9; ++c) {
      const double rows = static_cast<double>(std::min<std::size_t>(r + 2, 8) - (r < 2 ? 0 : r - 2) + 1);
      const double cols = static_cast<double>(std::min<std::size_t>(c + 2, 8) - (c < 2 ? 0 : c - 2) + 1);
      EXPECT_LE(cost(r, c, t(rng)), cfg.beta * rows * cols * 2.0 + 1e-15);
    }
}

TEST(StereoCost, HandBuiltUnitShift) {
  // derivatives by hand, window enumerated directly
  Image i1(GridShape(3, 3), std::vector<double>{0.0, 0.2, 0.9, 0.4, 0.4, 0.1, 1.0, 0.5, 0.3});
  Image i2(GridShape(3, 3), std::vector<double>{0.1, 0.3, 0.3, 0.0, 0.8, 0.6, 0.7, 0.7, 0.2});
  auto px = [](const Image& im, long r, long c) {
    return im(static_cast<std::size_t>(std::clamp(r, 0L, 2L)),
              static_cast<std::size_t>(std::clamp(c, 0L, 2L)));
  };
  auto drow = [&](const Image& im, long r, long c) {
    return r + 1 < 3 ? px(im, r + 1, c) - px(im, r, c) : 0.0;
  };
  auto dcol = [&](const Image& im, long r, long c) {
    return c + 1 < 3 ? px(im, r, c + 1) - px(im, r, c) : 0.0;
  };
  StereoConfig cfg;
  cfg.beta = 0.25;
  StereoCost cost(i1, i2, cfg);
  for (long r0 = 0; r0 < 3; ++r0)
    for (long c0 = 0; c0 < 3; ++c0) {
      double expect = 0.0;
      for (long r = r0 - 1; r <= r0 + 1; ++r)
        for (long c = c0 - 1; c <= c0 + 1; ++c) {
          if (r < 0 || r > 2 || c < 0 || c > 2) continue;
          const long cs = std::min(c + 1, 2L);
          expect += std::min(std::abs(drow(i1, r, cs) - drow(i2, r, c)), 0.25);
          expect += std::min(std::abs(dcol(i1, r, cs) - dcol(i2, r, c)), 0.25);
        }
      EXPECT_NEAR(cost(static_cast<std::size_t>(r0), static_cast<std::size_t>(c0), 1.0), expect,
                  1e-15);
    }
}

TEST(StereoCost, FractionalShiftInterpolates) {
  Image i1(GridShape(1, 4), std::vector<double>{0.0, 0.1, 0.4, 0.5});
  Image i2(GridShape(1, 4), 0.0);
  StereoConfig cfg;
  cfg.patch_radius = 0;
  cfg.beta = 10.0;
  StereoCost cost(i1, i2, cfg);
  // d_col of I1 is (0.1, 0.3, 0.1, 0); halfway between columns 0 and 1
  EXPECT_NEAR(cost(0, 0, 0.5), 0.2, 1e-15);
  EXPECT_NEAR(cost(0, 0, 0.25), 0.15, 1e-15);
  // past the right border the last column is used
  EXPECT_NEAR(cost(0, 3, 2.0), 0.0, 1e-15);
}

TEST(StereoCost, MonotoneInBeta) {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> t(0.0, 3.0);
  Image a = random_image(8, 8, rng), b = random_image(8, 8, rng);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t r = rng() % 8, c = rng() % 8;
    const double s = t(rng);
    double last = 0.0;
    for (double beta : {0.01, 0.05, 0.1, 0.3, 1.0}) {
      StereoConfig cfg;
      cfg.beta = beta;
      const double v = StereoCost(a, b, cfg)(r, c, s);
      EXPECT_GE(v, last);
      last = v;
    }
  }
}

TEST(StereoCost, LargeBetaIsUntruncatedSum) {
  std::mt19937 rng(4);
  Image a = random_image(6, 6, rng), b = random_image(6, 6, rng);
  StereoConfig cfg;
  cfg.beta = 1e6;
  StereoCost cost(a, b, cfg);
  auto da = image_derivatives(a), db = image_derivatives(b);
  for (std::size_t r0 = 0; r0 < 6; ++r0)
    for (std::size_t c0 = 0; c0 < 6; ++c0) {
      double expect = 0.0;
      for (std::size_t r = r0 == 0 ? 0 : r0 - 1; r <= std::min<std::size_t>(r0 + 1, 5); ++r)
        for (std::size_t c = c0 == 0 ? 0 : c0 - 1; c <= std::min<std::size_t>(c0 + 1, 5); ++c) {
          const std::size_t cs = std::min<std::size_t>(c + 2, 5);
          expect += std::abs(da.d_row(r, cs) - db.d_row(r, c)) + std::abs(da.d_col(r, cs) - db.d_col(r, c));
        }
      EXPECT_NEAR(cost(r0, c0, 2.0), expect, 1e-12);
    }
}

TEST(StereoCost, ZeroAtTrueIntegerShift) {
  std::mt19937 rng(9);
  Image i1 = random_image(10, 16, rng);
  for (std::size_t s : {1u, 2u, 3u}) {
    // I2(y) = I1(y1, y2 + s)
    Image i2 = shift_columns(i1, s);
    StereoCost cost(i1, i2, StereoConfig{});
    for (std::size_t r = 0; r < 10; ++r)
      for (std::size_t c = 1; c + 1 + s + 1 < 16; ++c)
        EXPECT_EQ(cost(r, c, static_cast<double>(s)), 0.0) << r << " " << c;
  }
}

TEST(StereoCost, RangeChecked) {
  Image im(GridShape(3, 3), 0.5);
  LabelSet g = LabelSet::uniform(5, 0.0, 3.0);
  EXPECT_THROW(stereo_cost(im, im, 1, 1, -0.1, StereoConfig{}, g), RangeError);
  EXPECT_THROW(stereo_cost(im, im, 1, 1, 3.5, StereoConfig{}, g), RangeError);
  EXPECT_EQ(stereo_cost(im, im, 1, 1, 3.0, StereoConfig{}, g), 0.0);
}

TEST(StereoConfig, Validation) {
  Image im(GridShape(3, 3), 0.5);
  StereoConfig bad;
  bad.beta = 0.0;
  EXPECT_THROW(StereoCost(im, im, bad), InputError);
  bad = StereoConfig{};
  bad.samples = 1;
  EXPECT_THROW(StereoCost(im, im, bad), InputError);
  bad = StereoConfig{};
  bad.patch_radius = -1;
  EXPECT_THROW(StereoCost(im, im, bad), InputError);
  EXPECT_THROW(StereoCost(im, Image(GridShape(3, 4), 0.5), StereoConfig{}), InputError);
}

TEST(StereoModel, IdenticalFlatImagesGiveZeroEnvelope) {
  // zero derivatives everywhere, so every shift matches
  Image flat(GridShape(5, 5), 0.5);
  LabelSet g = LabelSet::uniform(5, 0.0, 3.0);
  auto models = stereo_model(flat, flat, g, StereoConfig{});
  auto env = build_envelopes(models, g);
  for (const auto& m : models)
    for (const auto& piece : m.pieces)
      for (double v : std::get<SampledPiece>(piece).values) EXPECT_EQ(v, 0.0);
  std::mt19937 rng(14);
  std::uniform_real_distribution<double> t(0.0, 3.0);
  for (const auto& e : env) EXPECT_NEAR(e.eval(lift(t(rng), g).vector), 0.0, 1e-15);
}

TEST(StereoModel, SharedLabelSamples) {
  auto pair = synthetic::stereo_pair(16, 3);
  LabelSet g = LabelSet::uniform(5, 0.0, 3.0);
  StereoConfig cfg;
  cfg.samples = 5;
  cfg.lambda = 2.0;
  auto models = stereo_model(pair.left, pair.right, g, cfg);
  StereoCost cost(pair.left, pair.right, cfg);
  for (std::size_t p = 0; p < models.size(); p += 7) {
    const auto& m = models[p];
    for (std::size_t i = 0; i + 1 < m.pieces.size(); ++i)
      EXPECT_EQ(std::get<SampledPiece>(m.pieces[i]).values.back(),
                std::get<SampledPiece>(m.pieces[i + 1]).values.front());
    for (std::size_t i = 0; i < m.pieces.size(); ++i)
      EXPECT_DOUBLE_EQ(std::get<SampledPiece>(m.pieces[i]).values.front(),
                       2.0 * cost(p / 16, p % 16, g[i]));
  }
}

TEST(StereoModel, InterpolationErrorOnRampPair) {
  // I1 quadratic along the rows, so its column derivative is a ramp and the
  // cost is Lipschitz in t with a constant computable from the samples
  const std::size_t H = 6, W = 20;
  Image i1(GridShape(H, W)), i2(GridShape(H, W));
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c) {
      const double x = static_cast<double>(c) / W;
      i1(r, c) = x * x;
      i2(r, c) = 0.5 * x + 0.01 * static_cast<double>(r);
    }
  LabelSet g = LabelSet::uniform(5, 0.0, 3.0);
  StereoConfig cfg;
  cfg.samples = 4;
  cfg.beta = 0.5;
  auto models = stereo_model(i1, i2, g, cfg);
  StereoCost cost(i1, i2, cfg);
  auto d = image_derivatives(i1);
  double slope = 0.0;  // largest change of an interpolated derivative per unit shift
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c + 1 < W; ++c) {
      slope = std::max(slope, std::abs(d.d_col(r, c + 1) - d.d_col(r, c)));
      slope = std::max(slope, std::abs(d.d_row(r, c + 1) - d.d_row(r, c)));
    }
  const double spacing = g.widths()[0] / static_cast<double>(cfg.samples - 1);
  const double bound = 9.0 * 2.0 * slope * spacing / 2.0;
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> ut(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t r = rng() % H, c = rng() % W;
    const double t = ut(rng);
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(t / g.widths()[0]), 3);
    EXPECT_NEAR(models[r * W + c].value(i, t, g), cost(r, c, t), bound + 1e-12);
  }
}

TEST(Synthetic, TwoSquaresIsDeterministicAndQuantized) {
  Image a = synthetic::two_squares(), b = synthetic::two_squares();
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, synthetic::two_squares(2).values);
  EXPECT_EQ(a.shape.height, 32u);
  EXPECT_EQ(a.shape.width, 32u);
  for (double v : a.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_NEAR(v * 255.0, std::round(v * 255.0), 1e-9);
  }
}

TEST(Synthetic, StereoPairDisparityIsPiecewiseConstant) {
  auto p = synthetic::stereo_pair();
  auto q = synthetic::stereo_pair();
  EXPECT_EQ(p.left.values, q.left.values);
  EXPECT_EQ(p.right.values, q.right.values);
  std::set<double> levels(p.disparity.values.begin(), p.disparity.values.end());
  EXPECT_EQ(levels, (std::set<double>{0.5, 1.5, 2.5, 3.0}));
  for (double v : p.left.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}
