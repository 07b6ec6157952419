#include <cmath>
#include <optional>
#include <vector>

#include <gtest/gtest.h>

#include "csflock/metrics.hpp"
#include "test_support.hpp"

namespace csflock {
namespace {

using testing::line_state;
using testing::random_state;
using Trials = std::vector<std::optional<std::vector<double>>>;

TEST(StateMetrics, Examples) {
  const auto s = line_state({0, 3, 4}, {1, -1, 0});
  EXPECT_DOUBLE_EQ(velocity_dispersion(s), 4 + 1 + 1);
  EXPECT_DOUBLE_EQ(centered_speed_norm2(s), 2.0);
  const auto spread = position_spread(s);
  EXPECT_DOUBLE_EQ(spread.max_pair, 4.0);
  EXPECT_DOUBLE_EQ(spread.mean_pair, (3.0 + 4.0 + 1.0) / 3.0);
}

TEST(StateMetrics, DispersionIsNTimesCenteredSpeed) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = random_state(9, 3, seed);
    EXPECT_NEAR(velocity_dispersion(s), 9.0 * centered_speed_norm2(s), 1e-12 * velocity_dispersion(s));
  }
}

TEST(EnsembleMean, Example) {
  const Trials t{std::vector<double>{1, 2}, std::vector<double>{3, 6}};
  const auto out = ensemble_mean(t);
  EXPECT_EQ(out.mean, (std::vector<double>{2, 4}));
  // sample sd / sqrt(2): sqrt(2)/sqrt(2), sqrt(8)/sqrt(2)
  EXPECT_DOUBLE_EQ(out.std_error[0], 1.0);
  EXPECT_DOUBLE_EQ(out.std_error[1], 2.0);
  EXPECT_EQ(out.used, 2u);
  EXPECT_EQ(out.diverged, 0u);
}

TEST(EnsembleMean, SingleTrialHasZeroError) {
  const auto out = ensemble_mean(Trials{std::vector<double>{5.0, 7.0}});
  EXPECT_EQ(out.mean, (std::vector<double>{5.0, 7.0}));
  EXPECT_EQ(out.std_error, (std::vector<double>{0.0, 0.0}));
}

TEST(EnsembleMean, DivergedTrialsAreCountedNotAveraged) {
  const auto out = ensemble_mean(Trials{std::vector<double>{1.0}, std::nullopt, std::vector<double>{3.0}});
  EXPECT_EQ(out.mean, std::vector<double>{2.0});
  EXPECT_EQ(out.used, 2u);
  EXPECT_EQ(out.diverged, 1u);
}

TEST(EnsembleMean, AllDiverged) {
  const auto out = ensemble_mean(Trials{std::nullopt, std::nullopt});
  EXPECT_TRUE(out.empty());
  EXPECT_EQ(out.diverged, 2u);
}

TEST(EnsembleMean, Errors) {
  EXPECT_THROW(ensemble_mean(Trials{}), InvalidArgument);
  EXPECT_THROW(ensemble_mean(Trials{std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}}), InvalidArgument);
  EXPECT_THROW(ensemble_mean(Trials{std::vector<double>{NAN}}), InvalidArgument);
}

TEST(Slln, ExplicitPath) {
  const BrownianPath p(1.0, {1.0, 1.0, -2.0, 4.0}, ChannelLayout::common());
  const double times[] = {1.0, 2.0, 4.0};
  EXPECT_EQ(slln_diagnostic(p, times), (std::vector<double>{1.0, 1.0, 1.0}));
  const double zero[] = {0.0};
  EXPECT_THROW(slln_diagnostic(p, zero), InvalidArgument);
}

TEST(Slln, TendsToZero) {
  const auto p = make_brownian_path(3, 0.01, 1000000);
  const double times[] = {10000.0};
  EXPECT_LT(std::abs(slln_diagnostic(p, times)[0]), 5.0 / std::sqrt(10000.0));
}

EnsembleDiagnostics series(double disp_rate, double pair_rate, std::size_t samples = 101) {
  EnsembleDiagnostics d;
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = 0.01 * static_cast<double>(k);
    d.times.push_back(t);
    d.mean_dispersion.push_back(std::exp(disp_rate * t));
    d.mean_pair_distance.push_back(std::exp(pair_rate * t));
  }
  return d;
}

TEST(Classify, DecayingDispersionFlocks) {
  const auto v = classify_flocking(series(-5.0, 0.0));
  EXPECT_EQ(v.velocity_alignment, Criterion::Satisfied);
  EXPECT_EQ(v.group_forming, Criterion::Satisfied);
  EXPECT_NEAR(v.dispersion_log_slope, -5.0, 1e-9);
  EXPECT_EQ(v.window_samples, 51u);
}

TEST(Classify, GrowingDispersionViolates) {
  const auto v = classify_flocking(series(5.0, 3.0));
  EXPECT_EQ(v.velocity_alignment, Criterion::Violated);
  EXPECT_EQ(v.group_forming, Criterion::Violated);
}

TEST(Classify, FlatIsUndetermined) {
  const auto v = classify_flocking(series(0.01, 0.15));
  EXPECT_EQ(v.velocity_alignment, Criterion::Undetermined);
  EXPECT_EQ(v.group_forming, Criterion::Undetermined);
}

TEST(Classify, DivergenceViolatesAlignment) {
  auto d = series(-5.0, 0.0);
  d.diverged = 1;
  EXPECT_EQ(classify_flocking(d).velocity_alignment, Criterion::Violated);
}

TEST(Classify, ExactZeroDispersionIsAligned) {
  auto d = series(0.0, 0.0);
  for (auto& a : d.mean_dispersion) a = 0.0;
  EXPECT_EQ(classify_flocking(d).velocity_alignment, Criterion::Satisfied);
}

TEST(Classify, ShortWindowIsRejected) {
  EXPECT_THROW(classify_flocking(series(-1.0, 0.0, 15)), InvalidArgument);
  ClassifyOptions o;
  o.window_start = 0.0;
  EXPECT_NO_THROW(classify_flocking(series(-1.0, 0.0, 15), o));
}

}  // namespace
}  // namespace csflock
