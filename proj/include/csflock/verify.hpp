#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "csflock/brownian.hpp"
#include "csflock/ensemble.hpp"
#include "csflock/integrators.hpp"
#include "csflock/kernel.hpp"
#include "csflock/metrics.hpp"
#include "csflock/model.hpp"
#include "csflock/philox.hpp"
#include "csflock/state.hpp"
#include "csflock/theory.hpp"

namespace csflock {

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  std::size_t n = 5;
  std::size_t d = 2;
  double dt = 1e-4;
  std::uint64_t seed = 42;
  /// Negative control: false drops the Ito correction everywhere below.
  bool ito_correction = true;
  std::size_t threshold_n = 50;
};

/// Random state with coordinates uniform in [-1, 1], from its own stream.
inline SystemState random_state(std::size_t n, std::size_t d, std::uint64_t seed, std::uint32_t trial = 0) {
  return sample_initial(BoxInit{{-1.0}, {1.0}, {-1.0}, {1.0}}, n, d, StreamKey{seed, trial});
}

namespace detail {

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double a : v) m = std::max(m, std::abs(a));
  return m;
}

inline double max_row_norm(const Field& f, std::size_t n, std::size_t d) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += f[i * d + k] * f[i * d + k];
    m = std::max(m, std::sqrt(s));
  }
  return m;
}

inline CheckResult upper(std::string name, double measured, double bound, std::string detail = {}) {
  return {std::move(name), measured, bound, 0.0, measured <= bound, std::move(detail)};
}

/// Mean centered |v(t)|^2 over trials sharing one initial state, against the
/// constant-kernel closed form.
inline CheckResult moment_check(const std::string& name, const VerifyOptions& o, double sigma, double horizon,
                                std::size_t trials, double dt) {
  EnsembleConfig cfg;
  cfg.model.kernel = ConstantKernel{1.0};
  cfg.model.noise = CommonStratonovich{sigma};
  cfg.model.n = o.n;
  cfg.model.d = o.d;
  cfg.model.ito_correction = o.ito_correction;
  cfg.dt = dt;
  cfg.horizon = horizon;
  cfg.output_times = {horizon};
  cfg.n_trials = trials;
  cfg.base_seed = o.seed;
  cfg.fix_initial = true;
  cfg.init = BoxInit{{0.0}, {1.0}, {0.0}, {1.0}};
  const auto res = run_ensemble(cfg);
  const double v0 = res.v2_centered.mean.front();
  const double t[] = {horizon};
  const double exact = expected_decay_exact_const(v0, o.n, sigma, 1.0, t).values[0];
  const double mean = res.v2_centered.mean.back();
  const double se = res.v2_centered.std_error.back();
  const double z = std::abs(mean - exact) / se;
  return {name, z, 3.0, 0.0, z <= 3.0,
          "mean=" + std::to_string(mean) + " exact=" + std::to_string(exact) + " stderr=" + std::to_string(se) +
              " (measured is |mean-exact|/stderr)"};
}

}  // namespace detail

/// The desk-scale invariant and oracle suite behind `csflock verify`.
inline std::vector<CheckResult> run_verification(const VerifyOptions& o) {
  std::vector<CheckResult> out;
  const std::size_t n = o.n, d = o.d;
  const double nn = static_cast<double>(n);
  const Kernel rational = RationalKernel{1.0, 1.0, 0.25};

  // Pure field identities on random states.
  {
    double nullity = 0.0, e7 = 0.0, contraction = 0.0, ito = 0.0;
    const double sigma = 0.2;
    for (std::uint32_t trial = 0; trial < 8; ++trial) {
      const auto raw = random_state(n, d, o.seed, trial);
      ModelConfig m{rational, CommonStratonovich{sigma}, 1.0, n, d, o.ito_correction};
      const auto dr = drift(raw, m);
      const auto g = diffusion_common(raw, sigma);
      const auto c = o.ito_correction ? ito_correction_common(raw, sigma) : Field(n * d, 0.0);
      for (const Field* f : {&dr.dv, &g, &c}) {
        const double scale = detail::max_row_norm(*f, n, d);
        if (scale > 0.0) nullity = std::max(nullity, detail::max_abs(row_sum(*f, n, d)) / scale);
      }

      const auto centered = center_frame(raw).first;
      double ordered = 0.0, weighted = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const double dv2 = squared_distance(centered.v(i), centered.v(j));
          ordered += dv2;
          weighted += kernel_eval(rational, std::sqrt(squared_distance(centered.x(i), centered.x(j)))) * dv2;
        }
      }
      const double v2 = dot(centered.velocities(), centered.velocities());
      e7 = std::max(e7, std::abs(ordered - 2.0 * nn * v2) / (2.0 * nn * v2));

      const auto dc = drift(centered, m);
      const double lhs = 2.0 * dot(centered.velocities(), dc.dv);
      contraction = std::max(contraction, std::abs(lhs + weighted) / weighted);

      const auto gc = diffusion_common(centered, sigma);
      const auto cc = o.ito_correction ? ito_correction_common(centered, sigma) : Field(n * d, 0.0);
      const double ito_drift = 2.0 * dot(centered.velocities(), cc) + dot(gc, gc);
      const double expected = 2.0 * nn * nn * sigma * sigma * v2;
      ito = std::max(ito, std::abs(ito_drift - expected) / expected);
    }
    out.push_back(detail::upper("row_sum_nullity", nullity, 1e-12, "max |sum_i f_i| / max row norm"));
    out.push_back(detail::upper("pair_sum_identity", e7, 1e-12, "sum_ij |v_i-v_j|^2 vs 2N|v|^2, relative"));
    out.push_back(detail::upper("drift_contraction", contraction, 1e-10,
                                "2 sum <v_i, dv_i> vs -sum psi |v_i-v_j|^2, relative"));
    out.push_back(detail::upper("ito_contraction", ito, 1e-10,
                                "2 sum <v_i, c_i> + sum |g_i|^2 vs 2N^2 sigma^2 |v|^2, relative"));
  }

  // Exact conservation of the mean velocity and linear drift of the mean position.
  {
    ModelConfig m{rational, CommonStratonovich{0.2}, 1.0, n, d, o.ito_correction};
    SimulationOptions opt{StepScheme::EulerMaruyamaIto, 1e-3, 1.0, uniform_grid(1.0, 1e-3), true};
    const auto init = random_state(n, d, o.seed, 100);
    const auto traj = simulate(m, init, opt, o.seed);
    const auto v0 = row_mean(init.velocities(), n, d);
    const auto x0 = row_mean(init.positions(), n, d);
    double dv = 0.0, dx = 0.0;
    for (const auto& s : traj.snapshots) {
      const auto vb = row_mean(s.velocities(), n, d);
      const auto xb = row_mean(s.positions(), n, d);
      for (std::size_t k = 0; k < d; ++k) {
        dv = std::max(dv, std::abs(vb[k] - v0[k]));
        dx = std::max(dx, std::abs(xb[k] - x0[k] - v0[k] * s.t));
      }
    }
    out.push_back(detail::upper("mean_velocity_conservation", dv, 1e-10));
    out.push_back(detail::upper("mean_position_drift", dx, 1e-9));
  }

  // Constant kernel: pathwise closed form on the simulation's own path.
  {
    const double sigma = 0.1;
    ModelConfig m{ConstantKernel{1.0}, CommonStratonovich{sigma}, 1.0, n, d, o.ito_correction};
    const auto path = make_brownian_path(StreamKey{o.seed, 7}, o.dt, static_cast<std::size_t>(std::llround(1.0 / o.dt)));
    const auto times = uniform_grid(1.0, 0.01);
    SimulationOptions opt{StepScheme::EulerMaruyamaIto, o.dt, 1.0, times, false};
    const auto init = center_frame(random_state(n, d, o.seed, 101)).first;
    const auto traj = simulate(m, init, opt, path);
    const auto oracle = pathwise_v_exact_const(traj.diagnostics.v2_centered.front(), n, sigma, 1.0, path, traj.times);
    double gap = 0.0;
    for (std::size_t k = 0; k < traj.times.size(); ++k)
      gap = std::max(gap, std::abs(std::log(traj.diagnostics.v2_centered[k]) - oracle.log_values[k]));
    out.push_back(detail::upper("pathwise_exact_constant_kernel", gap, 1e-2, "max |log v2 - log oracle|, EM"));
  }

  // Comparison bounds on shared paths, rational kernel.
  {
    const double sigma = 0.2;
    ModelConfig m{rational, CommonStratonovich{sigma}, 1.0, n, d, o.ito_correction};
    const auto times = uniform_grid(1.0, 0.01);
    double v_ratio = 0.0, x_ratio = 0.0;
    for (std::uint32_t seed = 0; seed < 5; ++seed) {
      const auto path = make_brownian_path(StreamKey{o.seed, 1000 + seed}, o.dt,
                                           static_cast<std::size_t>(std::llround(1.0 / o.dt)));
      const auto init = random_state(n, d, o.seed, 200 + seed);
      SimulationOptions opt{StepScheme::EulerMaruyamaIto, o.dt, 1.0, times, false};
      const auto traj = simulate(m, init, opt, path);
      const auto& dg = traj.diagnostics;
      const auto vb = pathwise_v_upper(dg.v2_centered.front(), n, sigma, path, traj.times);
      const auto xb = pathwise_x_upper(dg.x_norm_centered.front(), std::sqrt(dg.v2_centered.front()), n, sigma, path,
                                       traj.times);
      for (std::size_t k = 0; k < traj.times.size(); ++k) {
        v_ratio = std::max(v_ratio, dg.v2_centered[k] / vb.values[k]);
        x_ratio = std::max(x_ratio, dg.x_norm_centered[k] / xb.values[k]);
      }
    }
    out.push_back(detail::upper("pathwise_v_domination", v_ratio, 1.05, "max v2 / V(t) over 5 seeds"));
    out.push_back(detail::upper("pathwise_x_domination", x_ratio, 1.05, "max |x| / X(t) over 5 seeds"));
  }

  // In-expectation oracle against Monte Carlo.
  out.push_back(detail::moment_check("moment_decay_constant_kernel", o, 0.1, 1.0, 1000, 1e-3));

  // The pathwise closed form averaged over path endpoints reproduces the moment.
  {
    const double sigma = 0.1;
    double worst = 0.0;
    for (double t : {0.5, 1.0}) {
      const std::size_t samples = 20000;
      double sum = 0.0, sum2 = 0.0;
      for (std::size_t k = 0; k < samples; ++k) {
        const double w = std::sqrt(t) * normal_at(StreamKey{o.seed, 9}, Purpose::Noise, 0, 0, k);
        const double val = pathwise_v_exact_const_at(1.0, n, sigma, 1.0, t, w);
        sum += val;
        sum2 += val * val;
      }
      const double mean = sum / samples;
      const double se = std::sqrt((sum2 / samples - mean * mean) / (samples - 1));
      const double tt[] = {t};
      const double exact = expected_decay_exact_const(1.0, n, sigma, 1.0, tt).values[0];
      worst = std::max(worst, std::abs(mean - exact) / se);
    }
    out.push_back(detail::upper("oracle_consistency", worst, 3.0, "|mean - exact| / stderr over 2e4 endpoints"));
  }

  // Noise-free limit: trapezoidal steps track exp(-2Nct) closely.
  {
    ModelConfig m{ConstantKernel{1.0}, NoNoise{}, 1.0, n, d, o.ito_correction};
    SimulationOptions opt{StepScheme::EulerHeunStratonovich, o.dt, 1.0, uniform_grid(1.0, 0.1), false};
    const auto traj = simulate(m, random_state(n, d, o.seed, 300), opt, o.seed);
    double rel = 0.0;
    const double v0 = traj.diagnostics.v2_centered.front();
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      const double exact = v0 * std::exp(-2.0 * nn * traj.times[k]);
      rel = std::max(rel, std::abs(traj.diagnostics.v2_centered[k] / exact - 1.0));
    }
    out.push_back(detail::upper("noise_free_exactness", rel, 10.0 * o.dt, "relative error, Heun"));
  }

  // Strong order of the Stratonovich scheme on the constant-kernel system.
  {
    const double sigma = 0.1;
    ModelConfig m{ConstantKernel{1.0}, CommonStratonovich{sigma}, 1.0, n, d, o.ito_correction};
    const auto init = center_frame(random_state(n, d, o.seed, 400)).first;
    auto path = make_brownian_path(StreamKey{o.seed, 11}, 1e-3, 1000);
    const auto times = uniform_grid(1.0, 0.01);
    std::vector<double> errors;
    for (int level = 0; level < 3; ++level) {
      SimulationOptions opt{StepScheme::EulerHeunStratonovich, path.dt(), 1.0, times, false};
      const auto traj = simulate(m, init, opt, path);
      const auto oracle = pathwise_v_exact_const(traj.diagnostics.v2_centered.front(), n, sigma, 1.0, path, traj.times);
      double gap = 0.0;
      for (std::size_t k = 0; k < traj.times.size(); ++k)
        gap = std::max(gap, std::abs(std::log(traj.diagnostics.v2_centered[k]) - oracle.log_values[k]));
      errors.push_back(gap);
      path = path.refined();
    }
    const double order = std::log2(errors[0] / errors[2]) / 2.0;
    out.push_back({"heun_strong_order", order, 0.9, 0.0, order >= 0.9, "empirical order over dt = 1e-3 / 4"});
  }

  // Brownian law of large numbers: |w_t / t| at t = 1000.
  {
    const double t = 1000.0;
    std::size_t within = 0;
    const std::size_t seeds = 20;
    for (std::uint32_t s = 0; s < seeds; ++s) {
      const BrownianStream stream(StreamKey{o.seed, 5000 + s}, 0.01);
      double w = 0.0;
      for (std::size_t k = 0; k < 100000; ++k) w += stream.increment(0, k);
      within += std::abs(w / t) <= 4.0 / std::sqrt(t) ? 1 : 0;
    }
    out.push_back({"slln_diagnostic", static_cast<double>(within), static_cast<double>(seeds), 0.0,
                   within + 1 >= seeds, "seeds with |w_t/t| <= 4/sqrt(t); at most one miss allowed"});
  }

  // Threshold arithmetic.
  {
    const auto th = thresholds(o.threshold_n, KernelBounds{1.0, 1.0});
    const double expected = std::sqrt(1.0 / static_cast<double>(o.threshold_n));
    const double err = std::max(std::abs(th.sigma_flock_max - expected), std::abs(th.sigma_nonflock_min - expected));
    out.push_back({"thresholds_N" + std::to_string(o.threshold_n), th.sigma_flock_max, expected, 1e-12, err <= 1e-12,
                   "sqrt(psi*/N) and sqrt(alpha/N) with alpha = psi* = 1"});
  }
  return out;
}

inline nlohmann::json verification_report(const std::vector<CheckResult>& checks) {
  nlohmann::json list = nlohmann::json::array();
  bool all = true;
  for (const auto& c : checks) {
    all = all && c.passed;
    list.push_back({{"name", c.name},
                    {"measured", c.measured},
                    {"bound", c.bound},
                    {"tolerance", c.tolerance},
                    {"verdict", c.passed ? "pass" : "fail"},
                    {"detail", c.detail}});
  }
  return {{"generator", kVersionTag}, {"all_passed", all}, {"checks", list}};
}

}  // namespace csflock
