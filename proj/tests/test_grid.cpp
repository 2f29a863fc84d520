#include <gtest/gtest.h>

#include <random>

#include "liftbreg/grid.hpp"

using namespace liftbreg;

namespace {

LiftedField random_lifted(const GridShape& g, std::size_t l, std::mt19937& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  LiftedField u(g, l);
  for (double& x : u.values) x = n(rng);
  return u;
}

DualField random_dual(const GridShape& g, std::size_t l, std::mt19937& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  DualField q(g, l);
  for (double& x : q.values) x = n(rng);
  return q;
}

// <grad u, q> evaluated as an explicit double sum over pixels and neighbours.
double grad_pairing_oracle(const LiftedField& u, const DualField& q) {
  const GridShape& g = u.shape;
  double s = 0.0;
  for (std::size_t r = 0; r < g.height; ++r)
    for (std::size_t c = 0; c < g.width; ++c)
      for (std::size_t k = 0; k < u.channels; ++k) {
        const std::size_t p = r * g.width + c;
        if (c + 1 < g.width)
          s += (u.at(p + 1, k) - u.at(p, k)) / g.h * q.at(p, k, 0);
        if (g.dims() == 2 && r + 1 < g.height)
          s += (u.at(p + g.width, k) - u.at(p, k)) / g.h * q.at(p, k, 1);
      }
  return s;
}

}  // namespace

TEST(Grid, ForwardDifference1D) {
  GridShape g(1, 3);
  LiftedField u(g, 1);
  u.values = {0.0, 1.0, 1.0};
  DualField q = gradient(u);
  ASSERT_EQ(q.dims, 1u);
  EXPECT_DOUBLE_EQ(q.values[0], 1.0);
  EXPECT_DOUBLE_EQ(q.values[1], 0.0);
  EXPECT_DOUBLE_EQ(q.values[2], 0.0);
}

TEST(Grid, AdjointOfUnitDual1D) {
  GridShape g(1, 3);
  DualField q(g, 1);
  q.values = {1.0, 0.0, 0.0};
  LiftedField p = divergence_adjoint(q);
  EXPECT_DOUBLE_EQ(p.values[0], -1.0);
  EXPECT_DOUBLE_EQ(p.values[1], 1.0);
  EXPECT_DOUBLE_EQ(p.values[2], 0.0);
}

TEST(Grid, ConstantFieldHasZeroGradient) {
  GridShape g(5, 7, 0.5);
  LiftedField u(g, 3, 0.42);
  for (double x : gradient(u).values) EXPECT_EQ(x, 0.0);
  DualField zero(g, 3);
  for (double x : divergence_adjoint(zero).values) EXPECT_EQ(x, 0.0);
}

TEST(Grid, SpacingScalesDifferences) {
  GridShape g(1, 2, 0.25);
  LiftedField u(g, 1);
  u.values = {1.0, 2.0};
  EXPECT_DOUBLE_EQ(gradient(u).values[0], 4.0);
}

TEST(Grid, AdjointIdentityMatchesDoubleSum) {
  std::mt19937 rng(7);
  GridShape g(4, 4);
  LiftedField u = random_lifted(g, 2, rng);
  DualField q = random_dual(g, 2, rng);
  const double lhs = dot(gradient(u).values, q.values);
  const double rhs = dot(u.values, divergence_adjoint(q).values);
  EXPECT_NEAR(lhs, grad_pairing_oracle(u, q), 1e-12);
  EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(Grid, AdjointnessProperty) {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<std::size_t> side(1, 16), chans(1, 5);
  std::uniform_real_distribution<double> spacing(0.2, 2.0);
  for (int trial = 0; trial < 300; ++trial) {
    GridShape g(side(rng), side(rng), spacing(rng));
    const std::size_t l = chans(rng);
    LiftedField u = random_lifted(g, l, rng);
    DualField q = random_dual(g, l, rng);
    const double lhs = dot(gradient(u).values, q.values);
    const double rhs = dot(u.values, divergence_adjoint(q).values);
    EXPECT_LE(std::abs(lhs - rhs), 1e-10 * norm2(u.values) * norm2(q.values))
        << g.height << "x" << g.width << " l=" << l;
  }
}

TEST(Grid, AdjointOfConstantDualVanishesInInterior) {
  // a constant dual column only leaves boundary terms: -c/h on the first
  // column, +c/h on the last, zero in between
  GridShape g(3, 5);
  DualField q(g, 1);
  for (std::size_t p = 0; p < g.pixels(); ++p) q.at(p, 0, 0) = 2.0;
  LiftedField p = divergence_adjoint(q);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_DOUBLE_EQ(p.at(r * 5 + 0, 0), -2.0);
    for (std::size_t c = 1; c < 4; ++c) EXPECT_DOUBLE_EQ(p.at(r * 5 + c, 0), 0.0);
    EXPECT_DOUBLE_EQ(p.at(r * 5 + 4, 0), 2.0);
  }
}

TEST(Grid, RejectsEmptyGrid) {
  EXPECT_THROW(GridShape(0, 3), InputError);
  EXPECT_THROW(GridShape(2, 2, 0.0), InputError);
}
