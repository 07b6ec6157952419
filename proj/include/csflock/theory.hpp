#pragma once

#include <cfloat>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "csflock/brownian.hpp"
#include "csflock/error.hpp"
#include "csflock/kernel.hpp"

namespace csflock {

enum class BoundKind {
  PathwiseVUpper,
  PathwiseXUpper,
  ExpectedGrowthLower,
  ExpectedDecayUpperLoose,
  ExpectedDecayExactConst,
  ExpectedXUpper,
  PathwiseVExactConst,
};

/// A closed-form series evaluated on a time grid. Values are formed from their
/// logarithms; anything beyond the double range is saturated to DBL_MAX and
/// flagged.
struct TheoryBound {
  BoundKind kind;
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> log_values;
  bool saturated = false;
};

namespace detail {

inline TheoryBound from_logs(BoundKind kind, std::span<const double> times, std::vector<double> logs) {
  TheoryBound b{kind, {times.begin(), times.end()}, {}, std::move(logs), false};
  static const double kLogMax = std::log(DBL_MAX);
  b.values.reserve(b.log_values.size());
  for (double l : b.log_values) {
    if (l > kLogMax) {
      b.values.push_back(DBL_MAX);
      b.saturated = true;
    } else {
      b.values.push_back(std::exp(l));
    }
  }
  return b;
}

inline double log_or_neg_inf(double a) {
  return a > 0.0 ? std::log(a) : -std::numeric_limits<double>::infinity();
}

inline void check_common(std::size_t n, double sigma) {
  require(n >= 2, "theory: N must be at least 2");
  require(std::isfinite(sigma) && sigma >= 0.0, "theory: sigma must be nonnegative");
}

}  // namespace detail

/// V(t) = |v(0)|^2 exp(-2 N sigma w_t), pathwise upper bound on the centered |v|^2.
inline TheoryBound pathwise_v_upper(double v0_norm2, std::size_t n, double sigma, const BrownianPath& path,
                                    std::span<const double> times) {
  detail::check_common(n, sigma);
  require(v0_norm2 >= 0.0, "pathwise_v_upper: v0_norm2 must be nonnegative");
  const auto w = path.cumulative(0);
  const double nn = static_cast<double>(n);
  std::vector<double> logs;
  for (double t : times) logs.push_back(detail::log_or_neg_inf(v0_norm2) - 2.0 * nn * sigma * w[path.index_of(t)]);
  return detail::from_logs(BoundKind::PathwiseVUpper, times, std::move(logs));
}

/// |x(0)| + |v(0)| * int_0^t exp(-N sigma w_s) ds, trapezoidal on the path grid.
inline TheoryBound pathwise_x_upper(double x0_norm, double v0_norm, std::size_t n, double sigma,
                                    const BrownianPath& path, std::span<const double> times) {
  detail::check_common(n, sigma);
  require(x0_norm >= 0.0 && v0_norm >= 0.0, "pathwise_x_upper: norms must be nonnegative");
  const auto w = path.cumulative(0);
  const double nn = static_cast<double>(n);
  const double dt = path.dt();
  // Running integral at every grid point.
  std::vector<double> integral(w.size(), 0.0);
  bool overflow = false;
  for (std::size_t k = 1; k < w.size(); ++k) {
    const double a = std::exp(-nn * sigma * w[k - 1]);
    const double b = std::exp(-nn * sigma * w[k]);
    integral[k] = integral[k - 1] + 0.5 * (a + b) * dt;
    if (!std::isfinite(integral[k])) overflow = true;
  }
  std::vector<double> logs;
  for (double t : times) {
    const double value = x0_norm + v0_norm * integral[path.index_of(t)];
    logs.push_back(std::isfinite(value) ? detail::log_or_neg_inf(value) : std::numeric_limits<double>::infinity());
  }
  auto b = detail::from_logs(BoundKind::PathwiseXUpper, times, std::move(logs));
  b.saturated = b.saturated || overflow;
  return b;
}

/// E V_1(t) = |v(0)|^2 exp(2N(N sigma^2 - alpha) t); lower bound on E|v|^2.
inline TheoryBound expected_growth_lower(double v0_norm2, std::size_t n, double sigma, double alpha,
                                         std::span<const double> times) {
  detail::check_common(n, sigma);
  const double nn = static_cast<double>(n);
  const double rate = 2.0 * nn * (nn * sigma * sigma - alpha);
  std::vector<double> logs;
  for (double t : times) logs.push_back(detail::log_or_neg_inf(v0_norm2) + rate * t);
  return detail::from_logs(BoundKind::ExpectedGrowthLower, times, std::move(logs));
}

/// |v(0)|^2 exp((N sigma^2 - psi*) t): the decay bound in its loose form. Its
/// rate is smaller than the exact constant-kernel rate by a factor 2N; the sign
/// threshold sigma^2 = psi*/N is the same.
inline TheoryBound expected_decay_upper_loose(double v0_norm2, std::size_t n, double sigma, double psi_star,
                                              std::span<const double> times) {
  detail::check_common(n, sigma);
  const double nn = static_cast<double>(n);
  const double rate = nn * sigma * sigma - psi_star;
  std::vector<double> logs;
  for (double t : times) logs.push_back(detail::log_or_neg_inf(v0_norm2) + rate * t);
  return detail::from_logs(BoundKind::ExpectedDecayUpperLoose, times, std::move(logs));
}

/// E|v(t)|^2 = |v(0)|^2 exp(2N(N sigma^2 - c) t) for psi == c (coupling 1).
inline TheoryBound expected_decay_exact_const(double v0_norm2, std::size_t n, double sigma, double psi_const,
                                              std::span<const double> times) {
  detail::check_common(n, sigma);
  const double nn = static_cast<double>(n);
  const double rate = 2.0 * nn * (nn * sigma * sigma - psi_const);
  std::vector<double> logs;
  for (double t : times) logs.push_back(detail::log_or_neg_inf(v0_norm2) + rate * t);
  return detail::from_logs(BoundKind::ExpectedDecayExactConst, times, std::move(logs));
}

/// |v(t)|^2 = |v(0)|^2 exp(-2Nct - 2N sigma w_t) for psi == c, on a shared path.
inline TheoryBound pathwise_v_exact_const(double v0_norm2, std::size_t n, double sigma, double psi_const,
                                          const BrownianPath& path, std::span<const double> times) {
  detail::check_common(n, sigma);
  const auto w = path.cumulative(0);
  const double nn = static_cast<double>(n);
  std::vector<double> logs;
  for (double t : times)
    logs.push_back(detail::log_or_neg_inf(v0_norm2) - 2.0 * nn * psi_const * t -
                   2.0 * nn * sigma * w[path.index_of(t)]);
  return detail::from_logs(BoundKind::PathwiseVExactConst, times, std::move(logs));
}

/// Same closed form at a single (t, w_t) pair.
inline double pathwise_v_exact_const_at(double v0_norm2, std::size_t n, double sigma, double psi_const, double t,
                                        double w_t) {
  const double nn = static_cast<double>(n);
  return v0_norm2 * std::exp(-2.0 * nn * psi_const * t - 2.0 * nn * sigma * w_t);
}

/// |x(0)| + |v(0)| * 2/r * (exp(r t / 2) - 1), r = (N - N^2) sigma^2 - psi*.
inline TheoryBound expected_x_upper(double x0_norm, double v0_norm, std::size_t n, double sigma, double psi_star,
                                    std::span<const double> times) {
  detail::check_common(n, sigma);
  const double nn = static_cast<double>(n);
  const double r = (nn - nn * nn) * sigma * sigma - psi_star;
  require(r != 0.0, "expected_x_upper: zero rate (needs psi* > 0 or sigma > 0)");
  std::vector<double> logs;
  for (double t : times) {
    const double value = x0_norm + v0_norm * 2.0 / r * std::expm1(0.5 * r * t);
    logs.push_back(std::isfinite(value) ? detail::log_or_neg_inf(value) : std::numeric_limits<double>::infinity());
  }
  return detail::from_logs(BoundKind::ExpectedXUpper, times, std::move(logs));
}

/// t -> infinity limit of expected_x_upper; infinite when the rate is positive.
inline double expected_x_upper_limit(double x0_norm, double v0_norm, std::size_t n, double sigma, double psi_star) {
  const double nn = static_cast<double>(n);
  const double r = (nn - nn * nn) * sigma * sigma - psi_star;
  require(r != 0.0, "expected_x_upper_limit: zero rate");
  return r < 0.0 ? x0_norm - 2.0 * v0_norm / r : std::numeric_limits<double>::infinity();
}

struct Thresholds {
  /// Flocking is guaranteed for sigma strictly below this value.
  double sigma_flock_max = 0.0;
  /// Non-flocking is guaranteed for sigma strictly above this value.
  double sigma_nonflock_min = 0.0;
  /// False when sup psi is infinite and the non-flocking result does not apply.
  bool nonflock_applicable = true;
};

inline Thresholds thresholds(std::size_t n, const KernelBounds& bounds) {
  require(n >= 2, "thresholds: N must be at least 2");
  require(bounds.psi_star >= 0.0 && bounds.psi_star <= bounds.alpha, "thresholds: need 0 <= psi* <= alpha");
  const double nn = static_cast<double>(n);
  Thresholds out;
  out.sigma_flock_max = std::sqrt(bounds.psi_star / nn);
  if (std::isinf(bounds.alpha)) {
    out.nonflock_applicable = false;
    out.sigma_nonflock_min = std::numeric_limits<double>::infinity();
  } else {
    out.sigma_nonflock_min = std::sqrt(bounds.alpha / nn);
  }
  return out;
}

enum class Regime { Flocking, NonFlocking, Indeterminate };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::Flocking: return "flocking regime";
    case Regime::NonFlocking: return "non-flocking regime";
    default: return "gap/indeterminate";
  }
}

/// Both threshold results use strict inequalities; sigma on a threshold is indeterminate.
inline Regime classify_regime(double sigma, const Thresholds& th) {
  if (sigma < th.sigma_flock_max) return Regime::Flocking;
  if (th.nonflock_applicable && sigma > th.sigma_nonflock_min) return Regime::NonFlocking;
  return Regime::Indeterminate;
}

}  // namespace csflock
