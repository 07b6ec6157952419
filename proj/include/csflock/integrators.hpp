#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "csflock/brownian.hpp"
#include "csflock/error.hpp"
#include "csflock/metrics.hpp"
#include "csflock/model.hpp"
#include "csflock/state.hpp"

namespace csflock {

enum class StepScheme {
  /// Euler-Maruyama on the Ito form; adds the Ito correction for common noise.
  EulerMaruyamaIto,
  /// Heun predictor-corrector, consistent with the Stratonovich integral.
  EulerHeunStratonovich,
  /// Explicit Euler on the drift; noise is ignored.
  DeterministicEuler,
};

inline const char* to_string(StepScheme s) {
  switch (s) {
    case StepScheme::EulerMaruyamaIto: return "euler_maruyama_ito";
    case StepScheme::EulerHeunStratonovich: return "euler_heun_stratonovich";
    default: return "deterministic_euler";
  }
}

inline StepScheme scheme_from_string(const std::string& name) {
  if (name == "euler_maruyama_ito" || name == "em") return StepScheme::EulerMaruyamaIto;
  if (name == "euler_heun_stratonovich" || name == "heun") return StepScheme::EulerHeunStratonovich;
  if (name == "deterministic_euler" || name == "euler") return StepScheme::DeterministicEuler;
  throw InvalidArgument("unknown scheme '" + name + "'");
}

/// Advances states in place with reusable scratch buffers. One Stepper per thread.
class Stepper {
 public:
  Stepper(const ModelConfig& config, StepScheme scheme) : config_(config), scheme_(scheme) {
    config_.validate();
  }

  const ModelConfig& config() const noexcept { return config_; }
  StepScheme scheme() const noexcept { return scheme_; }

  /// One step of size dt with Wiener increments dW (one per channel).
  /// Throws BlowUp if the new state is not finite.
  void advance(SystemState& s, double dt, std::span<const double> dW, std::size_t step_index = 0) {
    require(s.n() == config_.n && s.d() == config_.d, "step: state shape differs from config");
    const std::size_t expected = channel_count(config_.noise, s.n(), s.d());
    if (scheme_ != StepScheme::DeterministicEuler)
      require(dW.size() == expected, "step: dW has " + std::to_string(dW.size()) +
                                         " channels, noise model needs " + std::to_string(expected));

    const bool heun = scheme_ == StepScheme::EulerHeunStratonovich &&
                      (std::holds_alternative<CommonStratonovich>(config_.noise) ||
                       std::holds_alternative<NoNoise>(config_.noise));
    if (scheme_ == StepScheme::DeterministicEuler || std::holds_alternative<NoNoise>(config_.noise)) {
      heun ? heun_step(s, dt, 0.0, 0.0) : euler_step(s, dt);
    } else if (const auto* common = std::get_if<CommonStratonovich>(&config_.noise)) {
      heun ? heun_step(s, dt, common->sigma, dW[0]) : em_common_step(s, dt, common->sigma, dW[0]);
    } else {
      em_independent_step(s, dt, dW);
    }
    s.t += dt;
    if (!s.finite()) throw BlowUp(step_index, s.t);
  }

 private:
  void euler_step(SystemState& s, double dt) {
    alignment_into(s, config_.kernel, config_.coupling_scale, a_);
    auto& x = s.positions();
    auto& v = s.velocities();
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += v[i] * dt;
      v[i] += a_[i] * dt;
    }
  }

  void em_common_step(SystemState& s, double dt, double sigma, double dw) {
    alignment_into(s, config_.kernel, config_.coupling_scale, a_);
    diffusion_common_into(s, sigma, g_);
    if (config_.ito_correction) {
      ito_correction_common_into(s, sigma, c_);
    } else {
      c_.assign(a_.size(), 0.0);
    }
    auto& x = s.positions();
    auto& v = s.velocities();
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += v[i] * dt;
      v[i] += (a_[i] + c_[i]) * dt + g_[i] * dw;
    }
  }

  // Predictor: Euler-Maruyama without correction. Corrector: trapezoid on the
  // drift and on the diffusion, which converges to the Stratonovich solution.
  void heun_step(SystemState& s, double dt, double sigma, double dw) {
    alignment_into(s, config_.kernel, config_.coupling_scale, a_);
    if (sigma > 0.0) {
      diffusion_common_into(s, sigma, g_);
    } else {
      g_.assign(a_.size(), 0.0);
    }
    pred_ = s;
    auto& px = pred_.positions();
    auto& pv = pred_.velocities();
    for (std::size_t i = 0; i < px.size(); ++i) {
      px[i] += s.velocities()[i] * dt;
      pv[i] += a_[i] * dt + g_[i] * dw;
    }
    alignment_into(pred_, config_.kernel, config_.coupling_scale, a2_);
    if (sigma > 0.0) {
      diffusion_common_into(pred_, sigma, g2_);
    } else {
      g2_.assign(a_.size(), 0.0);
    }
    auto& x = s.positions();
    auto& v = s.velocities();
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += 0.5 * (v[i] + pv[i]) * dt;
      v[i] += 0.5 * (a_[i] + a2_[i]) * dt + 0.5 * (g_[i] + g2_[i]) * dw;
    }
  }

  void em_independent_step(SystemState& s, double dt, std::span<const double> dW) {
    alignment_into(s, config_.kernel, config_.coupling_scale, a_);
    const std::size_t n = s.n(), d = s.d();
    auto& x = s.positions();
    auto& v = s.velocities();
    if (const auto* add = std::get_if<AdditiveIndependent>(&config_.noise)) {
      const double amp = std::sqrt(add->D);
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] += v[i] * dt;
        v[i] += a_[i] * dt + amp * dW[i];
      }
      return;
    }
    const auto& mult = std::get<MultiplicativeVe>(config_.noise);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < d; ++k) {
        const std::size_t idx = i * d + k;
        const double coeff = mult.D * (v[idx] - mult.v_e[k]);
        x[idx] += v[idx] * dt;
        v[idx] += a_[idx] * dt + coeff * dW[i];
      }
    }
  }

  ModelConfig config_;
  StepScheme scheme_;
  Field a_, a2_, g_, g2_, c_;
  SystemState pred_;
};

/// Single step; see Stepper::advance.
inline SystemState step(const SystemState& state, const ModelConfig& config, StepScheme scheme,
                        double dt, std::span<const double> dW) {
  require(std::isfinite(dt) && dt > 0.0, "step: dt must be positive");
  state.validate();
  Stepper stepper(config, scheme);
  SystemState out = state;
  stepper.advance(out, dt, dW);
  return out;
}

/// Per-sample scalar diagnostics of a trajectory.
struct Diagnostics {
  std::vector<double> v2_centered;
  std::vector<double> dispersion;
  std::vector<double> max_pair_dist;
  std::vector<double> mean_pair_dist;
  std::vector<double> x_norm_centered;
  std::vector<double> w_t;

  void push(const SystemState& s, double w) {
    v2_centered.push_back(centered_speed_norm2(s));
    dispersion.push_back(velocity_dispersion(s));
    const auto spread = position_spread(s);
    max_pair_dist.push_back(spread.max_pair);
    mean_pair_dist.push_back(spread.mean_pair);
    x_norm_centered.push_back(std::sqrt(centered_position_norm2(s)));
    w_t.push_back(w);
  }
};

struct Divergence {
  std::size_t step_index = 0;
  double time = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  /// Empty unless snapshots were requested.
  std::vector<SystemState> snapshots;
  Diagnostics diagnostics;
  /// Set when integration stopped on a non-finite state; samples end before it.
  std::optional<Divergence> divergence;
  SystemState final_state;
};

struct SimulationOptions {
  StepScheme scheme = StepScheme::EulerMaruyamaIto;
  double dt = 1e-3;
  double horizon = 1.0;
  /// Output times; must lie on the step grid. t = 0 is always sampled.
  std::vector<double> output_times;
  bool keep_snapshots = false;
};

/// Times every `every` from 0 to horizon inclusive.
inline std::vector<double> uniform_grid(double horizon, double every) {
  require(every > 0.0 && horizon > 0.0, "uniform_grid: positive spacing and horizon required");
  const auto count = static_cast<std::size_t>(std::nearbyint(horizon / every));
  std::vector<double> out(count + 1);
  for (std::size_t k = 0; k <= count; ++k) out[k] = static_cast<double>(k) * every;
  return out;
}

namespace detail {

inline std::size_t steps_for(double horizon, double dt) {
  require(std::isfinite(dt) && dt > 0.0, "simulate: dt must be positive");
  require(std::isfinite(horizon) && horizon > 0.0, "simulate: horizon must be positive");
  const double k = std::nearbyint(horizon / dt);
  require(std::abs(k * dt - horizon) <= 1e-9 * horizon, "simulate: horizon is not a multiple of dt");
  return static_cast<std::size_t>(k);
}

/// Output times -> sorted step indices, always starting at 0.
inline std::vector<std::size_t> output_steps(const std::vector<double>& times, double dt, std::size_t steps) {
  std::vector<std::size_t> idx{0};
  for (double t : times) {
    require(std::isfinite(t) && t >= 0.0, "simulate: output time must be nonnegative");
    const double k = std::nearbyint(t / dt);
    require(std::abs(k * dt - t) <= 1e-9 * std::max(1.0, t), "simulate: output time off the step grid");
    require(k <= static_cast<double>(steps), "simulate: output time beyond the horizon");
    idx.push_back(static_cast<std::size_t>(k));
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

/// Shared integration loop; `fill(step, dW)` writes the step's increments.
template <class IncrementSource>
Trajectory integrate_with(const ModelConfig& config, const SystemState& init,
                          const SimulationOptions& opt, IncrementSource&& fill) {
  config.validate();
  init.validate();
  require(init.n() == config.n && init.d() == config.d, "simulate: initial state shape differs from config");
  const std::size_t steps = steps_for(opt.horizon, opt.dt);
  const auto sample_steps = output_steps(opt.output_times, opt.dt, steps);
  const std::size_t channels = channel_count(config.noise, config.n, config.d);

  Trajectory traj;
  Stepper stepper(config, opt.scheme);
  SystemState s = init;
  const double t0 = init.t;
  std::vector<double> dW(channels, 0.0);
  double w = 0.0;
  std::size_t next = 0;

  auto sample = [&](std::size_t k) {
    traj.times.push_back(t0 + static_cast<double>(k) * opt.dt);
    traj.diagnostics.push(s, w);
    if (opt.keep_snapshots) traj.snapshots.push_back(s);
  };

  if (sample_steps[next] == 0) sample(sample_steps[next++]);
  for (std::size_t k = 0; k < steps; ++k) {
    if (channels > 0) fill(k, std::span<double>(dW));
    try {
      stepper.advance(s, opt.dt, dW, k);
    } catch (const BlowUp& e) {
      traj.divergence = Divergence{e.step_index(), e.time()};
      break;
    }
    s.t = t0 + static_cast<double>(k + 1) * opt.dt;
    if (channels > 0) w += dW[0];
    if (next < sample_steps.size() && sample_steps[next] == k + 1) sample(sample_steps[next++]);
  }
  traj.final_state = std::move(s);
  return traj;
}

}  // namespace detail

/// Integrates on a counter-based stream keyed by `key`; a divergence is
/// recorded in the result instead of thrown.
inline Trajectory integrate(const ModelConfig& config, const SystemState& init, const SimulationOptions& opt,
                            StreamKey key) {
  const BrownianStream stream(key, opt.dt);
  return detail::integrate_with(config, init, opt, [&](std::size_t k, std::span<double> dW) {
    for (std::size_t c = 0; c < dW.size(); ++c) dW[c] = stream.increment(c, k);
  });
}

/// Integrates on a stored path; opt.dt must equal the path step.
inline Trajectory integrate(const ModelConfig& config, const SystemState& init, const SimulationOptions& opt,
                            const BrownianPath& path) {
  require(path.dt() == opt.dt, "simulate: path step differs from dt");
  const std::size_t channels = channel_count(config.noise, config.n, config.d);
  require(channels == 0 || path.channels() == channels, "simulate: path channel layout differs from noise model");
  require(detail::steps_for(opt.horizon, opt.dt) <= path.steps(), "simulate: path shorter than horizon");
  return detail::integrate_with(config, init, opt, [&](std::size_t k, std::span<double> dW) {
    const auto inc = path.step_increments(k);
    std::copy(inc.begin(), inc.end(), dW.begin());
  });
}

inline void throw_if_diverged(const Trajectory& traj) {
  if (traj.divergence) throw BlowUp(traj.divergence->step_index, traj.divergence->time);
}

/// Deterministic function of (config, init, options, seed). Throws BlowUp on a
/// non-finite state.
inline Trajectory simulate(const ModelConfig& config, const SystemState& init, const SimulationOptions& opt,
                           std::uint64_t seed) {
  auto traj = integrate(config, init, opt, StreamKey{seed, 0});
  throw_if_diverged(traj);
  return traj;
}

inline Trajectory simulate(const ModelConfig& config, const SystemState& init, const SimulationOptions& opt,
                           const BrownianPath& path) {
  auto traj = integrate(config, init, opt, path);
  throw_if_diverged(traj);
  return traj;
}

}  // namespace csflock
