#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "csflock/integrators.hpp"
#include "csflock/theory.hpp"
#include "test_support.hpp"

namespace csflock {
namespace {

using testing::line_state;
using testing::random_state;

ModelConfig common_const(std::size_t n, std::size_t d, double sigma, bool ito = true) {
  return ModelConfig{ConstantKernel{1.0}, CommonStratonovich{sigma}, 1.0, n, d, ito};
}

double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

TEST(Step, DeterministicEulerExample) {
  // psi = 1, N = 2: dv_1 = v_2 - v_1 = -2
  const ModelConfig m{ConstantKernel{1.0}, NoNoise{}, 1.0, 2, 1, true};
  const auto out = step(line_state({0, 1}, {1, -1}), m, StepScheme::DeterministicEuler, 0.1, {});
  EXPECT_DOUBLE_EQ(out.v(0)[0], 0.8);
  EXPECT_DOUBLE_EQ(out.v(1)[0], -0.8);
  EXPECT_DOUBLE_EQ(out.x(0)[0], 0.1);
  EXPECT_DOUBLE_EQ(out.x(1)[0], 0.9);
  EXPECT_DOUBLE_EQ(out.t, 0.1);
}

TEST(Step, EmCommonExample) {
  // g = sigma(S - N v) = (-1, 1), c = (sigma^2/2) N^2 v = (0.5, -0.5), a = (-2, 2)
  const auto m = common_const(2, 1, 0.5);
  const double dw[] = {0.1};
  const auto out = step(line_state({0, 1}, {1, -1}), m, StepScheme::EulerMaruyamaIto, 0.01, dw);
  EXPECT_NEAR(out.v(0)[0], 1.0 + (-2.0 + 0.5) * 0.01 - 0.1, 1e-15);
  EXPECT_NEAR(out.v(1)[0], -1.0 + (2.0 - 0.5) * 0.01 + 0.1, 1e-15);
}

TEST(Step, WrongChannelCountIsRejected) {
  const auto m = common_const(2, 1, 0.5);
  const double dw[] = {0.1, 0.2};
  EXPECT_THROW(step(line_state({0, 1}, {1, -1}), m, StepScheme::EulerMaruyamaIto, 0.01, dw), InvalidArgument);
  EXPECT_THROW(step(line_state({0, 1}, {1, -1}), m, StepScheme::EulerMaruyamaIto, 0.0, std::span<const double>(dw, 1)),
               InvalidArgument);
}

TEST(Step, BlowUpCarriesStepAndTime) {
  const ModelConfig m{ConstantKernel{1.0}, NoNoise{}, 1.0, 2, 1, true};
  auto s = line_state({0, 1}, {1e308, -1e308});
  Stepper st(m, StepScheme::DeterministicEuler);
  try {
    st.advance(s, 10.0, {}, 17);
    FAIL() << "expected BlowUp";
  } catch (const BlowUp& e) {
    EXPECT_EQ(e.step_index(), 17u);
    EXPECT_DOUBLE_EQ(e.time(), 10.0);
  }
}

TEST(Step, HeunWithoutNoiseIsSecondOrder) {
  // two-particle constant kernel: v_1 - v_2 decays as exp(-2 psi t)
  const ModelConfig m{ConstantKernel{1.0}, NoNoise{}, 1.0, 2, 1, true};
  auto err = [&](double dt) {
    SimulationOptions o{StepScheme::EulerHeunStratonovich, dt, 1.0, {1.0}, false};
    const auto traj = simulate(m, line_state({0, 1}, {1, -1}), o, 1);
    return std::abs(traj.final_state.v(0)[0] - std::exp(-2.0));
  };
  EXPECT_NEAR(std::log2(err(0.01) / err(0.005)), 2.0, 0.1);
}

TEST(Integrate, SameSeedIsBitIdentical) {
  const auto m = ModelConfig{RationalKernel{}, CommonStratonovich{0.3}, 1.0, 6, 2, true};
  SimulationOptions o{StepScheme::EulerMaruyamaIto, 1e-3, 0.5, uniform_grid(0.5, 0.05), false};
  const auto init = random_state(6, 2, 3);
  const auto a = simulate(m, init, o, 99);
  const auto b = simulate(m, init, o, 99);
  EXPECT_EQ(a.final_state, b.final_state);
  EXPECT_EQ(a.diagnostics.v2_centered, b.diagnostics.v2_centered);
  const auto c = simulate(m, init, o, 100);
  EXPECT_NE(a.final_state, c.final_state);
}

TEST(Integrate, StreamAndStoredPathAgree) {
  const auto m = ModelConfig{RationalKernel{}, CommonStratonovich{0.3}, 1.0, 4, 2, true};
  SimulationOptions o{StepScheme::EulerHeunStratonovich, 1e-3, 0.2, {0.1, 0.2}, true};
  const auto init = random_state(4, 2, 5);
  const auto a = simulate(m, init, o, 17);
  const auto b = simulate(m, init, o, make_brownian_path(17, 1e-3, 200));
  EXPECT_EQ(a.final_state, b.final_state);
  ASSERT_EQ(a.snapshots.size(), 3u);
  EXPECT_EQ(a.times, (std::vector<double>{0.0, 0.1, 0.2}));
}

TEST(Integrate, OutputTimesMustLieOnGrid) {
  const auto m = common_const(3, 1, 0.1);
  const auto init = random_state(3, 1, 1);
  EXPECT_THROW(simulate(m, init, {StepScheme::EulerMaruyamaIto, 1e-2, 1.0, {0.123}, false}, 1), InvalidArgument);
  EXPECT_THROW(simulate(m, init, {StepScheme::EulerMaruyamaIto, 1e-2, 1.0, {2.0}, false}, 1), InvalidArgument);
  EXPECT_THROW(simulate(m, init, {StepScheme::EulerMaruyamaIto, 0.3, 1.0, {}, false}, 1), InvalidArgument);
}

TEST(Integrate, DivergenceIsRecorded) {
  const auto m = ModelConfig{ConstantKernel{1.0}, CommonStratonovich{50.0}, 1.0, 10, 1, true};
  SimulationOptions o{StepScheme::EulerMaruyamaIto, 0.1, 100.0, {}, false};
  const auto traj = integrate(m, random_state(10, 1, 2), o, StreamKey{1, 0});
  ASSERT_TRUE(traj.divergence.has_value());
  EXPECT_THROW(throw_if_diverged(traj), BlowUp);
}

TEST(Invariants, MeanVelocityIsConserved) {
  for (StepScheme scheme : {StepScheme::EulerMaruyamaIto, StepScheme::EulerHeunStratonovich}) {
    const auto m = ModelConfig{RationalKernel{}, CommonStratonovich{0.3}, 1.0, 7, 3, true};
    const auto init = random_state(7, 3, 8, 2.0);
    const auto traj = simulate(m, init, {scheme, 1e-3, 1.0, {}, false}, 4);
    const auto v0 = row_mean(init.velocities(), 7, 3), v1 = row_mean(traj.final_state.velocities(), 7, 3);
    const auto x0 = row_mean(init.positions(), 7, 3), x1 = row_mean(traj.final_state.positions(), 7, 3);
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_NEAR(v1[k], v0[k], 1e-12);
      EXPECT_NEAR(x1[k], x0[k] + v0[k] * 1.0, 1e-11);
    }
  }
}

TEST(Invariants, CenteringCommutesWithIntegration) {
  const auto m = ModelConfig{RationalKernel{}, CommonStratonovich{0.2}, 1.0, 5, 2, true};
  const auto init = random_state(5, 2, 12, 3.0);
  const auto path = make_brownian_path(6, 1e-3, 500);
  SimulationOptions o{StepScheme::EulerHeunStratonovich, 1e-3, 0.5, {}, false};
  const auto direct = simulate(m, init, o, path).final_state;
  const auto [c, rec] = center_frame(init);
  const auto back = uncenter_frame(simulate(m, c, o, path).final_state, rec, 0.5);
  EXPECT_LT(max_abs_diff(direct.velocities(), back.velocities()), 1e-12);
  EXPECT_LT(max_abs_diff(direct.positions(), back.positions()), 1e-11);
}

TEST(Invariants, EqualVelocitiesStayAligned) {
  const auto m = ModelConfig{RationalKernel{}, CommonStratonovich{0.4}, 1.0, 4, 2, true};
  auto init = random_state(4, 2, 1);
  for (std::size_t i = 0; i < 4; ++i) {
    init.v(i)[0] = 0.25;
    init.v(i)[1] = -0.5;
  }
  const auto traj = simulate(m, init, {StepScheme::EulerMaruyamaIto, 1e-3, 0.3, {}, false}, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(traj.final_state.v(i)[0], 0.25);
    EXPECT_EQ(traj.final_state.v(i)[1], -0.5);
  }
}

TEST(NoiseFree, EulerMatchesExponentialDecayForSmallN) {
  // relative error of explicit Euler here is about N^2 c^2 T dt = 4 dt
  const ModelConfig m{ConstantKernel{1.0}, NoNoise{}, 1.0, 2, 2, true};
  const auto init = center_frame(random_state(2, 2, 4)).first;
  const double dt = 1e-4, horizon = 1.0;
  const auto traj = simulate(m, init, {StepScheme::DeterministicEuler, dt, horizon, {horizon}, false}, 0);
  const double v0 = centered_speed_norm2(init);
  const double exact = v0 * std::exp(-2.0 * 2.0 * horizon);
  EXPECT_LE(std::abs(traj.diagnostics.v2_centered.back() - exact) / exact, 10 * dt);
}

TEST(NoiseFree, HeunMatchesExponentialDecay) {
  const ModelConfig m{ConstantKernel{1.0}, NoNoise{}, 1.0, 5, 2, true};
  const auto init = center_frame(random_state(5, 2, 4)).first;
  const double dt = 1e-4;
  const auto traj = simulate(m, init, {StepScheme::EulerHeunStratonovich, dt, 1.0, {1.0}, false}, 0);
  const double exact = centered_speed_norm2(init) * std::exp(-2.0 * 5.0);
  EXPECT_LE(std::abs(traj.diagnostics.v2_centered.back() - exact) / exact, 10 * dt);
}

TEST(ExactSolution, EmTracksPathwiseFormula) {
  const std::size_t n = 5;
  const double sigma = 0.1, dt = 1e-4, horizon = 1.0;
  const auto m = common_const(n, 2, sigma);
  const auto init = center_frame(random_state(n, 2, 31)).first;
  const auto path = make_brownian_path(42, dt, 10000);
  const auto times = uniform_grid(horizon, 0.1);
  const auto traj = simulate(m, init, {StepScheme::EulerMaruyamaIto, dt, horizon, times, false}, path);
  const auto exact = pathwise_v_exact_const(centered_speed_norm2(init), n, sigma, 1.0, path, times);
  for (std::size_t k = 0; k < times.size(); ++k)
    EXPECT_LE(std::abs(traj.diagnostics.v2_centered[k] - exact.values[k]) / exact.values[k], 1e-2) << times[k];
}

// Strong error at T against the closed form |v(T)|^2, on nested refinements of
// one path per seed.
double strong_order(StepScheme scheme, std::size_t seeds) {
  const std::size_t n = 5;
  const double sigma = 0.1, horizon = 1.0;
  const auto m = common_const(n, 2, sigma);
  std::vector<double> errs(3, 0.0);
  for (std::size_t s = 0; s < seeds; ++s) {
    const auto init = center_frame(random_state(n, 2, 500 + s)).first;
    const double v0 = centered_speed_norm2(init);
    auto path = make_brownian_path(1000 + s, 1e-2, 100);
    for (std::size_t level = 0; level < 3; ++level) {
      const double dt = path.dt();
      const auto traj = simulate(m, init, {scheme, dt, horizon, {horizon}, false}, path);
      const double exact = pathwise_v_exact_const_at(v0, n, sigma, 1.0, horizon, path.cumulative().back());
      errs[level] += std::abs(std::sqrt(traj.diagnostics.v2_centered.back()) - std::sqrt(exact));
      path = path.refined();
    }
  }
  return std::log2(errs[0] / errs[2]) / 2.0;
}

TEST(ExactSolution, HeunHasStrongOrderOne) { EXPECT_GE(strong_order(StepScheme::EulerHeunStratonovich, 20), 0.9); }

TEST(ExactSolution, EmHasStrongOrderHalfOnMultiplicativeNoise) {
  const double order = strong_order(StepScheme::EulerMaruyamaIto, 20);
  EXPECT_GE(order, 0.4);
}

TEST(ExactSolution, DroppingItoCorrectionBiasesTheMean) {
  // Without the correction EM integrates dv = ... dw in the Ito sense, whose
  // mean decays at rate 2N(N sigma^2/2 - c) instead of 2N(N sigma^2 - c).
  const std::size_t n = 5;
  const double sigma = 0.3, horizon = 0.5;
  auto mean_v2 = [&](bool ito) {
    double total = 0.0;
    const auto init = center_frame(random_state(n, 1, 8)).first;
    for (std::uint32_t trial = 0; trial < 400; ++trial) {
      const auto traj = integrate(common_const(n, 1, sigma, ito), init,
                                  {StepScheme::EulerMaruyamaIto, 1e-3, horizon, {horizon}, false}, StreamKey{5, trial});
      total += traj.diagnostics.v2_centered.back() / traj.diagnostics.v2_centered.front();
    }
    return total / 400;
  };
  const double with = mean_v2(true), without = mean_v2(false);
  const double exact = std::exp(2.0 * n * (n * sigma * sigma - 1.0) * horizon);
  const double wrong = std::exp(2.0 * n * (n * sigma * sigma / 2 - 1.0) * horizon);
  EXPECT_LT(std::abs(std::log(with / exact)), std::abs(std::log(with / wrong)));
  EXPECT_LT(std::abs(std::log(without / wrong)), std::abs(std::log(without / exact)));
}

TEST(Schemes, ParseNames) {
  EXPECT_EQ(scheme_from_string("em"), StepScheme::EulerMaruyamaIto);
  EXPECT_EQ(scheme_from_string("euler_heun_stratonovich"), StepScheme::EulerHeunStratonovich);
  EXPECT_EQ(scheme_from_string(to_string(StepScheme::DeterministicEuler)), StepScheme::DeterministicEuler);
  EXPECT_THROW(scheme_from_string("rk4"), InvalidArgument);
}

TEST(IndependentNoise, AdditiveStepUsesEveryChannel) {
  const ModelConfig m{ConstantKernel{0.0 + 1.0}, AdditiveIndependent{4.0}, 1.0, 2, 1, true};
  const double dw[] = {0.1, -0.3};
  const auto out = step(line_state({0, 1}, {0, 0}), m, StepScheme::EulerMaruyamaIto, 0.01, dw);
  EXPECT_DOUBLE_EQ(out.v(0)[0], 0.2);
  EXPECT_DOUBLE_EQ(out.v(1)[0], -0.6);
}

TEST(IndependentNoise, MultiplicativeVeStopsAtTarget) {
  const ModelConfig m{ConstantKernel{1.0}, MultiplicativeVe{1.0, {1.0}}, 1.0, 2, 1, true};
  const double dw[] = {0.5, 0.5};
  const auto out = step(line_state({0, 1}, {1, 1}), m, StepScheme::EulerMaruyamaIto, 0.01, dw);
  EXPECT_EQ(out.v(0)[0], 1.0);
  EXPECT_EQ(out.v(1)[0], 1.0);
}

}  // namespace
}  // namespace csflock
