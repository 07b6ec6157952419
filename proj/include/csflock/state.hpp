#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "csflock/error.hpp"

namespace csflock {

/// Row-major N x d block of doubles: one row per particle.
using Field = std::vector<double>;

/// Positions and velocities of N particles in R^d at time t.
class SystemState {
 public:
  SystemState() = default;

  SystemState(std::size_t n, std::size_t d, double t = 0.0)
      : t(t), n_(n), d_(d), x_(n * d, 0.0), v_(n * d, 0.0) {
    require(n >= 2, "SystemState: need at least two particles");
    require(d >= 1, "SystemState: dimension must be at least 1");
  }

  SystemState(std::size_t n, std::size_t d, Field positions, Field velocities, double t = 0.0)
      : t(t), n_(n), d_(d), x_(std::move(positions)), v_(std::move(velocities)) {
    require(n >= 2, "SystemState: need at least two particles");
    require(d >= 1, "SystemState: dimension must be at least 1");
    require(x_.size() == n * d && v_.size() == n * d,
            "SystemState: positions and velocities must both have shape (N, d)");
  }

  double t = 0.0;

  std::size_t n() const noexcept { return n_; }
  std::size_t d() const noexcept { return d_; }

  std::span<double> x(std::size_t i) noexcept { return {x_.data() + i * d_, d_}; }
  std::span<const double> x(std::size_t i) const noexcept { return {x_.data() + i * d_, d_}; }
  std::span<double> v(std::size_t i) noexcept { return {v_.data() + i * d_, d_}; }
  std::span<const double> v(std::size_t i) const noexcept { return {v_.data() + i * d_, d_}; }

  Field& positions() noexcept { return x_; }
  const Field& positions() const noexcept { return x_; }
  Field& velocities() noexcept { return v_; }
  const Field& velocities() const noexcept { return v_; }

  bool finite() const noexcept {
    auto ok = [](double a) { return std::isfinite(a); };
    return std::isfinite(t) && std::all_of(x_.begin(), x_.end(), ok) &&
           std::all_of(v_.begin(), v_.end(), ok);
  }

  void validate() const {
    require(x_.size() == n_ * d_ && v_.size() == n_ * d_ && n_ >= 2 && d_ >= 1,
            "SystemState: inconsistent shape");
    require(finite(), "SystemState: non-finite component");
  }

  friend bool operator==(const SystemState&, const SystemState&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  Field x_;
  Field v_;
};

/// Means removed by center_frame; x_bar0 is the mean position at state.t.
struct FrameRecord {
  std::vector<double> x_bar0;
  std::vector<double> v_bar0;
};

/// Column means of an N x d block.
inline std::vector<double> row_mean(const Field& f, std::size_t n, std::size_t d) {
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) mean[k] += f[i * d + k];
  for (auto& m : mean) m /= static_cast<double>(n);
  return mean;
}

/// Column sums of an N x d block.
inline std::vector<double> row_sum(const Field& f, std::size_t n, std::size_t d) {
  std::vector<double> sum(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) sum[k] += f[i * d + k];
  return sum;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

inline double dot(const Field& a, const Field& b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Subtracts the mean position and mean velocity so both sum to zero.
inline std::pair<SystemState, FrameRecord> center_frame(const SystemState& state) {
  state.validate();
  const std::size_t n = state.n(), d = state.d();
  FrameRecord rec{row_mean(state.positions(), n, d), row_mean(state.velocities(), n, d)};
  SystemState out = state;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      out.x(i)[k] -= rec.x_bar0[k];
      out.v(i)[k] -= rec.v_bar0[k];
    }
  }
  return {std::move(out), std::move(rec)};
}

/// Inverse of center_frame. `elapsed` is the time since the frame was recorded;
/// the mean position drifts with the (conserved) mean velocity.
inline SystemState uncenter_frame(const SystemState& centered, const FrameRecord& rec,
                                  double elapsed = 0.0) {
  const std::size_t n = centered.n(), d = centered.d();
  require(rec.x_bar0.size() == d && rec.v_bar0.size() == d, "uncenter_frame: dimension mismatch");
  SystemState out = centered;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      out.x(i)[k] += rec.x_bar0[k] + rec.v_bar0[k] * elapsed;
      out.v(i)[k] += rec.v_bar0[k];
    }
  }
  return out;
}

}  // namespace csflock
