#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "csflock/brownian.hpp"
#include "csflock/error.hpp"
#include "csflock/state.hpp"

namespace csflock {

/// Sum over unordered pairs i < j of |v_i - v_j|^2.
inline double velocity_dispersion(const SystemState& s) {
  double total = 0.0;
  for (std::size_t i = 0; i < s.n(); ++i)
    for (std::size_t j = i + 1; j < s.n(); ++j) total += squared_distance(s.v(i), s.v(j));
  return total;
}

/// |v|^2 after removing the mean velocity.
inline double centered_speed_norm2(const SystemState& s) {
  const auto mean = row_mean(s.velocities(), s.n(), s.d());
  double total = 0.0;
  for (std::size_t i = 0; i < s.n(); ++i) {
    const auto vi = s.v(i);
    for (std::size_t k = 0; k < s.d(); ++k) {
      const double c = vi[k] - mean[k];
      total += c * c;
    }
  }
  return total;
}

/// |x|^2 after removing the mean position.
inline double centered_position_norm2(const SystemState& s) {
  const auto mean = row_mean(s.positions(), s.n(), s.d());
  double total = 0.0;
  for (std::size_t i = 0; i < s.n(); ++i) {
    const auto xi = s.x(i);
    for (std::size_t k = 0; k < s.d(); ++k) {
      const double c = xi[k] - mean[k];
      total += c * c;
    }
  }
  return total;
}

struct PositionSpread {
  double max_pair = 0.0;
  /// Mean of |x_i - x_j| over unordered pairs.
  double mean_pair = 0.0;
};

inline PositionSpread position_spread(const SystemState& s) {
  PositionSpread out;
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < s.n(); ++i) {
    for (std::size_t j = i + 1; j < s.n(); ++j) {
      const double dist = std::sqrt(squared_distance(s.x(i), s.x(j)));
      out.max_pair = std::max(out.max_pair, dist);
      sum += dist;
      ++pairs;
    }
  }
  out.mean_pair = sum / static_cast<double>(pairs);
  return out;
}

/// Pointwise Monte Carlo estimate over trials.
struct SeriesStats {
  std::vector<double> mean;
  /// sample standard deviation / sqrt(used); zero when a single trial is used.
  std::vector<double> std_error;
  std::size_t used = 0;
  std::size_t diverged = 0;

  bool empty() const noexcept { return used == 0; }
};

/// Mean and standard error across trials, folded in trial order. A trial that
/// diverged is passed as nullopt: it is counted, never averaged.
inline SeriesStats ensemble_mean(std::span<const std::optional<std::vector<double>>> trials) {
  require(!trials.empty(), "ensemble_mean: no trials");
  SeriesStats out;
  std::optional<std::size_t> length;
  for (const auto& t : trials) {
    if (!t) {
      ++out.diverged;
      continue;
    }
    if (length && *length != t->size()) throw InvalidArgument("ensemble_mean: mismatched time grids");
    length = t->size();
    for (double a : *t) require(std::isfinite(a), "ensemble_mean: non-finite value in a kept trial");
    ++out.used;
  }
  if (!length) return out;
  const std::size_t len = *length;
  out.mean.assign(len, 0.0);
  out.std_error.assign(len, 0.0);
  for (const auto& t : trials)
    if (t)
      for (std::size_t k = 0; k < len; ++k) out.mean[k] += (*t)[k];
  const double m = static_cast<double>(out.used);
  for (auto& a : out.mean) a /= m;
  if (out.used < 2) return out;
  for (const auto& t : trials) {
    if (!t) continue;
    for (std::size_t k = 0; k < len; ++k) {
      const double dev = (*t)[k] - out.mean[k];
      out.std_error[k] += dev * dev;
    }
  }
  for (auto& a : out.std_error) a = std::sqrt(a / (m - 1.0)) / std::sqrt(m);
  return out;
}

inline SeriesStats ensemble_mean(const std::vector<std::optional<std::vector<double>>>& trials) {
  return ensemble_mean(std::span<const std::optional<std::vector<double>>>(trials));
}

/// w_t / t of channel 0 at each requested time.
inline std::vector<double> slln_diagnostic(const BrownianPath& path, std::span<const double> times) {
  const auto w = path.cumulative(0);
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    require(t > 0.0, "slln_diagnostic: t must be positive");
    out.push_back(w[path.index_of(t)] / t);
  }
  return out;
}

enum class Criterion { Satisfied, Violated, Undetermined };

inline const char* to_string(Criterion c) {
  switch (c) {
    case Criterion::Satisfied: return "satisfied";
    case Criterion::Violated: return "violated";
    default: return "undetermined";
  }
}

/// Ensemble-level series the classifier reads.
struct EnsembleDiagnostics {
  std::vector<double> times;
  std::vector<double> mean_dispersion;
  std::vector<double> mean_pair_distance;
  std::size_t diverged = 0;
};

struct ClassifyOptions {
  /// Window start; defaults to half the horizon.
  std::optional<double> window_start;
  /// Log-slope margin per unit time.
  double margin = 0.1;
  /// Group forming is violated once the pair-distance log-slope reaches this
  /// multiple of the margin; between one and this multiple it is undetermined.
  double group_violation_factor = 2.0;
};

struct FlockingVerdict {
  Criterion velocity_alignment = Criterion::Undetermined;
  Criterion group_forming = Criterion::Undetermined;
  double dispersion_log_slope = 0.0;
  double pair_distance_log_slope = 0.0;
  double max_mean_pair_distance = 0.0;
  double window_start = 0.0;
  std::size_t window_samples = 0;
  std::size_t diverged = 0;
};

namespace detail {

inline double log_slope(std::span<const double> t, std::span<const double> y) {
  double tm = 0.0, ym = 0.0;
  const double n = static_cast<double>(t.size());
  std::vector<double> ly(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    ly[k] = std::log(std::max(y[k], DBL_MIN));
    tm += t[k];
    ym += ly[k];
  }
  tm /= n;
  ym /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    sxy += (t[k] - tm) * (ly[k] - ym);
    sxx += (t[k] - tm) * (t[k] - tm);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace detail

/// Finite-window reading of time-asymptotic flocking: the velocity criterion
/// looks at the log-slope of mean dispersion, the group criterion at the
/// log-slope of the mean pair distance. Either stays undetermined unless its
/// statistic clears the margin.
inline FlockingVerdict classify_flocking(const EnsembleDiagnostics& diag, const ClassifyOptions& opt = {}) {
  const std::size_t len = diag.times.size();
  require(len > 0, "classify_flocking: empty diagnostics");
  require(diag.mean_dispersion.size() == len && diag.mean_pair_distance.size() == len,
          "classify_flocking: series lengths differ");
  require(opt.margin > 0.0, "classify_flocking: margin must be positive");

  FlockingVerdict out;
  out.diverged = diag.diverged;
  out.window_start = opt.window_start.value_or(0.5 * diag.times.back());
  const auto first =
      std::lower_bound(diag.times.begin(), diag.times.end(), out.window_start - 1e-12) - diag.times.begin();
  out.window_samples = len - static_cast<std::size_t>(first);
  if (out.window_samples < 10)
    throw InvalidArgument("classify_flocking: window holds " + std::to_string(out.window_samples) +
                          " samples, need at least 10");

  const std::span<const double> t(diag.times.data() + first, out.window_samples);
  const std::span<const double> disp(diag.mean_dispersion.data() + first, out.window_samples);
  const std::span<const double> pair(diag.mean_pair_distance.data() + first, out.window_samples);

  out.dispersion_log_slope = detail::log_slope(t, disp);
  out.pair_distance_log_slope = detail::log_slope(t, pair);
  out.max_mean_pair_distance = *std::max_element(pair.begin(), pair.end());

  const bool aligned_exactly = std::all_of(disp.begin(), disp.end(), [](double a) { return a == 0.0; });
  if (diag.diverged > 0) {
    out.velocity_alignment = Criterion::Violated;
  } else if (aligned_exactly) {
    out.velocity_alignment = Criterion::Satisfied;
  } else if (out.dispersion_log_slope <= -opt.margin &&
             diag.mean_dispersion.back() < diag.mean_dispersion.front()) {
    out.velocity_alignment = Criterion::Satisfied;
  } else if (out.dispersion_log_slope >= opt.margin) {
    out.velocity_alignment = Criterion::Violated;
  }

  const bool collapsed = std::all_of(pair.begin(), pair.end(), [](double a) { return a == 0.0; });
  if (collapsed || out.pair_distance_log_slope <= opt.margin) {
    out.group_forming = Criterion::Satisfied;
  } else if (out.pair_distance_log_slope >= opt.group_violation_factor * opt.margin) {
    out.group_forming = Criterion::Violated;
  }
  return out;
}

}  // namespace csflock
