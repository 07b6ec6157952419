#include <cfloat>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "csflock/theory.hpp"

namespace csflock {
namespace {

TEST(Thresholds, ConstantKernelN50) {
  const auto th = thresholds(50, kernel_bounds(ConstantKernel{1.0}));
  EXPECT_NEAR(th.sigma_flock_max, 0.1414213562373095, 1e-15);
  EXPECT_NEAR(th.sigma_nonflock_min, 0.1414213562373095, 1e-15);
  EXPECT_EQ(classify_regime(0.05, th), Regime::Flocking);
  EXPECT_EQ(classify_regime(0.3, th), Regime::NonFlocking);
  EXPECT_EQ(classify_regime(th.sigma_flock_max, th), Regime::Indeterminate);
}

TEST(Thresholds, RationalKernelHasNoFlockingRange) {
  const auto th = thresholds(50, kernel_bounds(RationalKernel{1, 1, 0.25}));
  EXPECT_EQ(th.sigma_flock_max, 0.0);
  EXPECT_NEAR(th.sigma_nonflock_min, std::sqrt(1.0 / 50), 1e-15);
  EXPECT_EQ(classify_regime(0.3, th), Regime::NonFlocking);
  EXPECT_EQ(classify_regime(0.1, th), Regime::Indeterminate);
}

TEST(Thresholds, UncappedSingularKernel) {
  const auto th = thresholds(10, kernel_bounds(SingularKernel{1.0, 0.5, 0.0}));
  EXPECT_FALSE(th.nonflock_applicable);
  EXPECT_EQ(classify_regime(100.0, th), Regime::Indeterminate);
}

TEST(Thresholds, Ordering) {
  for (std::size_t n : {2u, 5u, 50u, 1000u})
    for (double k : {0.1, 1.0, 3.0}) {
      const auto th = thresholds(n, kernel_bounds(RationalKernel{k, 1.0, 0.5}));
      EXPECT_LE(th.sigma_flock_max, th.sigma_nonflock_min);
    }
}

TEST(Bounds, ExpectedDecayExample) {
  // N = 2, sigma^2 = 0.25, c = 1: rate 2*2*(0.5 - 1) = -2
  const double times[] = {0.0, 0.5, 1.0};
  const auto b = expected_decay_exact_const(3.0, 2, 0.5, 1.0, times);
  EXPECT_DOUBLE_EQ(b.values[0], 3.0);
  EXPECT_NEAR(b.values[2], 3.0 * std::exp(-2.0), 1e-15);
  const auto loose = expected_decay_upper_loose(3.0, 2, 0.5, 1.0, times);
  EXPECT_NEAR(loose.values[2], 3.0 * std::exp(-0.5), 1e-15);
}

TEST(Bounds, GrowthAndDecayShareTheSignThreshold) {
  const double times[] = {1.0};
  for (double sigma : {0.05, 0.14, 0.15, 0.3}) {
    const double exact = expected_decay_exact_const(1.0, 50, sigma, 1.0, times).log_values[0];
    const double loose = expected_decay_upper_loose(1.0, 50, sigma, 1.0, times).log_values[0];
    EXPECT_EQ(exact > 0, loose > 0);
  }
}

TEST(Bounds, Saturation) {
  const double times[] = {10.0};
  const auto b = expected_growth_lower(1.0, 1000, 1.0, 0.0, times);
  EXPECT_TRUE(b.saturated);
  EXPECT_EQ(b.values[0], DBL_MAX);
  EXPECT_NEAR(b.log_values[0], 2.0 * 1000 * 1000 * 10.0, 1e-6);
}

TEST(Bounds, PathwiseOnExplicitPath) {
  const BrownianPath p(0.5, {0.1, -0.3}, ChannelLayout::common());
  const double times[] = {0.0, 0.5, 1.0};
  const auto v = pathwise_v_upper(2.0, 3, 0.5, p, times);
  EXPECT_NEAR(v.values[1], 2.0 * std::exp(-2 * 3 * 0.5 * 0.1), 1e-15);
  EXPECT_NEAR(v.values[2], 2.0 * std::exp(-2 * 3 * 0.5 * -0.2), 1e-15);
  const auto ex = pathwise_v_exact_const(2.0, 3, 0.5, 1.0, p, times);
  EXPECT_NEAR(ex.values[2], 2.0 * std::exp(-6.0 - 2 * 3 * 0.5 * -0.2), 1e-14);
  EXPECT_NEAR(ex.values[2], pathwise_v_exact_const_at(2.0, 3, 0.5, 1.0, 1.0, -0.2), 1e-15);
}

TEST(Bounds, PathwiseXTrapezoid) {
  const BrownianPath p(1.0, {0.0, 0.0}, ChannelLayout::common());
  const double times[] = {2.0};
  EXPECT_NEAR(pathwise_x_upper(1.0, 2.0, 4, 0.3, p, times).values[0], 1.0 + 2.0 * 2.0, 1e-15);
}

TEST(Bounds, ExpectedXUpper) {
  // r = (2 - 4) * 0.25 - 1 = -1.5
  const double times[] = {0.0, 1.0};
  const auto b = expected_x_upper(1.0, 2.0, 2, 0.5, 1.0, times);
  EXPECT_DOUBLE_EQ(b.values[0], 1.0);
  EXPECT_NEAR(b.values[1], 1.0 + 2.0 * 2.0 / -1.5 * (std::exp(-0.75) - 1.0), 1e-14);
  EXPECT_NEAR(expected_x_upper_limit(1.0, 2.0, 2, 0.5, 1.0), 1.0 + 4.0 / 1.5, 1e-14);
  EXPECT_THROW(expected_x_upper(1.0, 1.0, 2, 0.0, 0.0, times), InvalidArgument);
}

TEST(Bounds, BadInputs) {
  const double times[] = {1.0};
  EXPECT_THROW(expected_decay_exact_const(1.0, 1, 0.1, 1.0, times), InvalidArgument);
  EXPECT_THROW(expected_decay_exact_const(1.0, 5, -0.1, 1.0, times), InvalidArgument);
}

// Independent Monte Carlo oracle for the constant-kernel moment: in the
// centered frame |v|^2 solves the scalar Ito SDE
//   dY = 2N(N sigma^2 - c) Y dt - 2 N sigma Y dw,
// integrated here with its own generator by log-Euler (exact in law).
TEST(Oracle, ScalarSdeMonteCarloMatchesClosedForm) {
  const std::size_t n = 5;
  const double sigma = 0.1, c = 1.0, horizon = 0.5, dt = 1e-3;
  const double nn = static_cast<double>(n);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> z;
  const std::size_t m = 20000;
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    double logy = 0.0;
    for (int j = 0; j < static_cast<int>(horizon / dt); ++j) {
      const double mu = 2 * nn * (nn * sigma * sigma - c);
      const double vol = 2 * nn * sigma;
      logy += (mu - 0.5 * vol * vol) * dt + vol * std::sqrt(dt) * z(rng);
    }
    const double y = std::exp(logy);
    s1 += y;
    s2 += y * y;
  }
  const double mean = s1 / m;
  const double se = std::sqrt((s2 / m - mean * mean) / (m - 1));
  const double t[] = {horizon};
  const double exact = expected_decay_exact_const(1.0, n, sigma, c, t).values[0];
  EXPECT_LE(std::abs(mean - exact), 4 * se) << "mean " << mean << " exact " << exact;
}

// Pathwise form evaluated at sampled w_t has the lognormal mean of the closed
// form.
TEST(Oracle, PathwiseFormAveragesToMoment) {
  const std::size_t n = 4;
  const double sigma = 0.1, t = 0.5;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> z;
  const std::size_t m = 20000;
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double y = pathwise_v_exact_const_at(1.0, n, sigma, 1.0, t, std::sqrt(t) * z(rng));
    s1 += y;
    s2 += y * y;
  }
  const double mean = s1 / m;
  const double se = std::sqrt((s2 / m - mean * mean) / (m - 1));
  const double times[] = {t};
  EXPECT_LE(std::abs(mean - expected_decay_exact_const(1.0, n, sigma, 1.0, times).values[0]), 4 * se);
}

}  // namespace
}  // namespace csflock
