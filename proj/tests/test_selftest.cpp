#include <gtest/gtest.h>

#include "liftbreg/selftest.hpp"

using namespace liftbreg;

TEST(Selftest, DefaultRunPasses) {
  for (const auto& r : checks::run_selftest({})) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
}

TEST(Selftest, WrongAdjointIsCaught) {
  checks::SelftestOptions opt;
  opt.wrong_adjoint = true;
  for (const auto& r : checks::run_selftest(opt)) {
    if (r.name == "adjointness")
      EXPECT_FALSE(r.passed);
    else
      EXPECT_TRUE(r.passed) << r.name;
  }
}

TEST(Selftest, SeedIsDeterministic) {
  checks::SelftestOptions opt;
  opt.seed = 42;
  auto a = checks::run_selftest(opt), b = checks::run_selftest(opt);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].detail, b[k].detail);
}

TEST(Additivity, CorrectedFormWithNonzeroFirstLabel) {
  // with g_1 != 0 the lifted linear term carries the constant p g_1 as well
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> ua(0.0, 3.0), ub(-2.0, 2.0), u01(0.0, 1.0);
  double worst_verbatim = 0.0, worst_corrected = 0.0;
  for (int m = 0; m < 50; ++m) {
    LabelSet g = checks::random_labels(4, 0.7, rng);
    PieceModel m1;
    for (std::size_t i = 0; i < 3; ++i) m1.pieces.push_back(QuadraticPiece{ua(rng), ub(rng), ub(rng)});
    const double p = ub(rng);
    PieceModel m2 = m1;
    for (auto& piece : m2.pieces) std::get<QuadraticPiece>(piece).b -= p;
    Envelope e1 = Envelope::build(m1, g), e2 = Envelope::build(m2, g);
    std::vector<double> u{u01(rng), 0.0, 0.0};
    u[1] = u[0] * u01(rng);
    u[2] = u[1] * u01(rng);
    double lin = 0.0;
    for (std::size_t i = 0; i < 3; ++i) lin += p * g.widths()[i] * u[i];
    worst_verbatim = std::max(worst_verbatim, std::abs(e2.eval(u) - e1.eval(u) + lin));
    worst_corrected =
        std::max(worst_corrected, std::abs(e2.eval(u) - e1.eval(u) + lin + p * g.front()));
  }
  EXPECT_LE(worst_corrected, 1e-8);
  EXPECT_GT(worst_verbatim, 1e-3);
}
