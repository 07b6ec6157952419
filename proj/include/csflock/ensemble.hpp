#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "csflock/error.hpp"
#include "csflock/integrators.hpp"
#include "csflock/metrics.hpp"
#include "csflock/model.hpp"
#include "csflock/philox.hpp"
#include "csflock/state.hpp"

namespace csflock {

inline constexpr const char* kVersionTag = "csflock 0.1.0";

/// Each particle draws (x_i, v_i) uniformly from a box. Bounds hold either one
/// value (used for every coordinate) or d values.
struct BoxInit {
  std::vector<double> x_low{0.0}, x_high{1.0};
  std::vector<double> v_low{0.0}, v_high{1.0};
};

/// The same explicit state for every trial.
struct ExplicitInit {
  SystemState state;
};

using InitSpec = std::variant<BoxInit, ExplicitInit>;

struct EnsembleConfig {
  ModelConfig model;
  StepScheme scheme = StepScheme::EulerMaruyamaIto;
  double dt = 1e-3;
  double horizon = 1.0;
  std::vector<double> output_times;
  std::size_t n_trials = 100;
  std::uint64_t base_seed = 42;
  InitSpec init = BoxInit{};
  /// Every trial starts from trial 0's sampled state.
  bool fix_initial = false;
  /// Worker threads; 0 picks the hardware concurrency. Never affects results.
  unsigned parallelism = 0;
  /// Snapshot times reported by the CLI for trial 0.
  std::vector<double> snapshot_times;

  SimulationOptions simulation_options() const {
    return {scheme, dt, horizon, output_times, false};
  }

  void validate() const {
    model.validate();
    require(n_trials >= 1, "EnsembleConfig: need at least one trial");
    require(std::isfinite(dt) && dt > 0.0, "EnsembleConfig: dt must be positive");
    require(std::isfinite(horizon) && horizon > 0.0, "EnsembleConfig: horizon must be positive");
    if (const auto* box = std::get_if<BoxInit>(&init)) {
      auto check = [this](const std::vector<double>& lo, const std::vector<double>& hi, const char* what) {
        require(lo.size() == hi.size() && (lo.size() == 1 || lo.size() == model.d),
                std::string("init box: ") + what + " bounds need 1 or d entries");
        for (std::size_t k = 0; k < lo.size(); ++k) {
          require(std::isfinite(lo[k]) && std::isfinite(hi[k]), std::string("init box: non-finite ") + what + " bound");
          require(lo[k] <= hi[k], std::string("init box: ") + what + " low exceeds high");
        }
      };
      check(box->x_low, box->x_high, "position");
      check(box->v_low, box->v_high, "velocity");
    } else {
      const auto& s = std::get<ExplicitInit>(init).state;
      s.validate();
      require(s.n() == model.n && s.d() == model.d, "explicit init: shape differs from model");
    }
  }
};

/// Initial state of one trial, drawn from its own Init-purpose stream.
inline SystemState sample_initial(const InitSpec& spec, std::size_t n, std::size_t d, StreamKey key) {
  if (const auto* e = std::get_if<ExplicitInit>(&spec)) return e->state;
  const auto& box = std::get<BoxInit>(spec);
  auto bound = [d](const std::vector<double>& b, std::size_t k) { return b.size() == 1 ? b[0] : b.at(k); };
  for (std::size_t k = 0; k < d; ++k) {
    require(bound(box.x_low, k) <= bound(box.x_high, k), "sample_initial: position box has low > high");
    require(bound(box.v_low, k) <= bound(box.v_high, k), "sample_initial: velocity box has low > high");
  }
  SystemState s(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      const std::uint64_t idx = i * d + k;
      const double ux = uniform_at(key, Purpose::Init, 0, 0, idx);
      const double uv = uniform_at(key, Purpose::Init, 0, 1, idx);
      const double xl = bound(box.x_low, k), xh = bound(box.x_high, k);
      const double vl = bound(box.v_low, k), vh = bound(box.v_high, k);
      s.x(i)[k] = xl + (xh - xl) * ux;
      s.v(i)[k] = vl + (vh - vl) * uv;
    }
  }
  return s;
}

struct TrialDivergence {
  std::size_t trial = 0;
  std::size_t step = 0;
  double time = 0.0;
};

/// Last-sample diagnostics of a trial that completed.
struct TrialTerminal {
  std::size_t trial = 0;
  double dispersion = 0.0;
  double v2_centered = 0.0;
  double mean_pair_distance = 0.0;
  double initial_v2_centered = 0.0;
};

struct EnsembleResult {
  EnsembleConfig config;
  std::vector<double> times;
  SeriesStats dispersion;
  SeriesStats v2_centered;
  SeriesStats pair_distance;
  std::size_t diverged_count = 0;
  std::vector<TrialDivergence> divergences;
  std::vector<TrialTerminal> terminal;
  std::string version = kVersionTag;

  /// True when every trial diverged and no aggregate exists.
  bool empty_aggregate() const noexcept { return dispersion.empty(); }

  EnsembleDiagnostics diagnostics() const {
    return {times, dispersion.mean, pair_distance.mean, diverged_count};
  }
};

/// Per-trial output kept until the ordered reduction.
struct TrialOutcome {
  std::optional<Diagnostics> diagnostics;
  std::optional<Divergence> divergence;
  std::vector<double> times;
};

inline StreamKey trial_key(const EnsembleConfig& cfg, std::size_t trial) {
  require(trial <= 0xFFFFFFFFull, "run_ensemble: trial index exceeds 2^32");
  return StreamKey{cfg.base_seed, static_cast<std::uint32_t>(trial)};
}

inline SystemState trial_initial(const EnsembleConfig& cfg, std::size_t trial) {
  return sample_initial(cfg.init, cfg.model.n, cfg.model.d, trial_key(cfg, cfg.fix_initial ? 0 : trial));
}

/// Runs trial `trial` exactly as run_ensemble does.
inline Trajectory run_trial(const EnsembleConfig& cfg, std::size_t trial, bool keep_snapshots = false) {
  auto opt = cfg.simulation_options();
  opt.keep_snapshots = keep_snapshots;
  for (double t : cfg.snapshot_times)
    if (keep_snapshots) opt.output_times.push_back(t);
  return integrate(cfg.model, trial_initial(cfg, trial), opt, trial_key(cfg, trial));
}

/// Runs all trials, possibly on several threads, then folds them in trial order.
inline EnsembleResult run_ensemble(const EnsembleConfig& cfg) {
  cfg.validate();
  std::vector<TrialOutcome> outcomes(cfg.n_trials);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= cfg.n_trials || failed.load()) return;
      try {
        auto traj = run_trial(cfg, k);
        auto& out = outcomes[k];
        out.times = std::move(traj.times);
        out.divergence = traj.divergence;
        if (!traj.divergence) out.diagnostics = std::move(traj.diagnostics);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };
  unsigned threads = cfg.parallelism == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.parallelism;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, cfg.n_trials));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  EnsembleResult res;
  res.config = cfg;
  std::vector<std::optional<std::vector<double>>> disp, v2, pair;
  for (std::size_t k = 0; k < cfg.n_trials; ++k) {
    const auto& o = outcomes[k];
    if (o.divergence) {
      res.divergences.push_back({k, o.divergence->step_index, o.divergence->time});
      disp.emplace_back();
      v2.emplace_back();
      pair.emplace_back();
      continue;
    }
    if (res.times.empty()) res.times = o.times;
    const auto& d = *o.diagnostics;
    disp.emplace_back(d.dispersion);
    v2.emplace_back(d.v2_centered);
    pair.emplace_back(d.mean_pair_dist);
    res.terminal.push_back({k, d.dispersion.back(), d.v2_centered.back(), d.mean_pair_dist.back(),
                            d.v2_centered.front()});
  }
  res.diverged_count = res.divergences.size();
  res.dispersion = ensemble_mean(disp);
  res.v2_centered = ensemble_mean(v2);
  res.pair_distance = ensemble_mean(pair);
  if (res.times.empty()) {
    // every trial diverged; keep the requested grid for reference
    const auto steps = detail::steps_for(cfg.horizon, cfg.dt);
    for (auto k : detail::output_steps(cfg.output_times, cfg.dt, steps))
      res.times.push_back(static_cast<double>(k) * cfg.dt);
  }
  return res;
}

}  // namespace csflock
