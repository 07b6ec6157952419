#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "csflock/error.hpp"
#include "csflock/model.hpp"
#include "csflock/philox.hpp"

namespace csflock {

/// Which Wiener channels a noise model reads.
struct ChannelLayout {
  enum class Kind { None, Common, PerComponent, PerParticle } kind = Kind::Common;
  std::size_t channels = 1;

  static ChannelLayout common() { return {Kind::Common, 1}; }
  static ChannelLayout for_noise(const NoiseModel& noise, std::size_t n, std::size_t d) {
    switch (noise.index()) {
      case 0: return {Kind::None, 0};
      case 1: return {Kind::Common, 1};
      case 2: return {Kind::PerComponent, n * d};
      default: return {Kind::PerParticle, n};
    }
  }
  friend bool operator==(const ChannelLayout&, const ChannelLayout&) = default;
};

/// Increments of a family of independent Wiener processes on a uniform grid,
/// generated on demand from counter-based streams.
///
/// Increments are rounded to a dyadic grid 2^-40 below the base step's standard
/// deviation. Refinement splits each coarse increment with a Brownian bridge,
/// and because every value is an exact small multiple of a power of two the two
/// halves add back to the coarse increment with no rounding.
class BrownianStream {
 public:
  BrownianStream(StreamKey key, double base_dt, std::uint32_t level = 0)
      : key_(key), base_dt_(base_dt), level_(level) {
    require(std::isfinite(base_dt) && base_dt > 0.0, "BrownianStream: dt must be positive");
    require(level < 256, "BrownianStream: refinement level exceeds 255");
    base_quantum_ = std::ldexp(1.0, std::ilogb(std::sqrt(base_dt)) - 40);
  }

  double dt() const noexcept { return std::ldexp(base_dt_, -static_cast<int>(level_)); }
  double base_dt() const noexcept { return base_dt_; }
  std::uint32_t level() const noexcept { return level_; }
  const StreamKey& key() const noexcept { return key_; }

  BrownianStream refined() const { return BrownianStream(key_, base_dt_, level_ + 1); }

  /// Increment of `channel` over [step*dt, (step+1)*dt).
  double increment(std::uint64_t channel, std::uint64_t step) const {
    return increment_at(level_, channel, step);
  }

 private:
  double quantize(double value, std::uint32_t level) const {
    const double q = std::ldexp(base_quantum_, -static_cast<int>(level));
    return std::nearbyint(value / q) * q;
  }

  double increment_at(std::uint32_t level, std::uint64_t channel, std::uint64_t step) const {
    if (level == 0) {
      const double z = normal_at(key_, Purpose::Noise, 0, channel, step);
      return quantize(std::sqrt(base_dt_) * z, 0);
    }
    const std::uint64_t parent_step = step / 2;
    const double parent = increment_at(level - 1, channel, parent_step);
    const double parent_dt = std::ldexp(base_dt_, -static_cast<int>(level - 1));
    const double z = normal_at(key_, Purpose::Bridge, level, channel, parent_step);
    const double half_gap = quantize(0.5 * std::sqrt(parent_dt) * z, level);
    const double mid = 0.5 * parent;
    return (step % 2 == 0) ? mid + half_gap : mid - half_gap;
  }

  StreamKey key_;
  double base_dt_;
  std::uint32_t level_;
  double base_quantum_;
};

/// Materialised increments, steps x channels, row-major by step.
class BrownianPath {
 public:
  /// Upper bound on stored increments; longer runs should read a BrownianStream.
  static constexpr std::size_t kMaxStoredIncrements = std::size_t{1} << 28;

  BrownianPath(BrownianStream stream, std::size_t steps, ChannelLayout layout)
      : stream_(stream), steps_(steps), layout_(layout) {
    require(steps >= 1, "BrownianPath: need at least one step");
    const std::size_t ch = layout.channels;
    if (ch != 0 && steps > kMaxStoredIncrements / ch)
      throw InvalidArgument(
          "BrownianPath: steps * channels exceeds the in-memory limit; use BrownianStream "
          "(streaming mode) instead");
    increments_.resize(steps * ch);
    for (std::size_t k = 0; k < steps; ++k)
      for (std::size_t c = 0; c < ch; ++c) increments_[k * ch + c] = stream.increment(c, k);
  }

  /// Test and diagnostic constructor from explicit increments.
  BrownianPath(double dt, std::vector<double> increments, ChannelLayout layout)
      : stream_(StreamKey{}, dt), layout_(layout), increments_(std::move(increments)) {
    require(layout.channels >= 1, "BrownianPath: explicit paths need at least one channel");
    require(!increments_.empty() && increments_.size() % layout.channels == 0,
            "BrownianPath: increments must fill whole steps");
    steps_ = increments_.size() / layout.channels;
  }

  double dt() const noexcept { return stream_.dt(); }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t channels() const noexcept { return layout_.channels; }
  const ChannelLayout& layout() const noexcept { return layout_; }
  std::uint64_t seed() const noexcept { return stream_.key().seed; }
  const BrownianStream& stream() const noexcept { return stream_; }
  double horizon() const noexcept { return dt() * static_cast<double>(steps_); }

  double increment(std::size_t step, std::size_t channel = 0) const {
    return increments_[step * layout_.channels + channel];
  }
  std::span<const double> step_increments(std::size_t step) const {
    return {increments_.data() + step * layout_.channels, layout_.channels};
  }
  const std::vector<double>& increments() const noexcept { return increments_; }

  /// Same path at half the step; pairwise sums reproduce this path exactly.
  BrownianPath refined() const { return BrownianPath(stream_.refined(), steps_ * 2, layout_); }

  /// Cumulative values w(k dt), k = 0..steps, of one channel.
  std::vector<double> cumulative(std::size_t channel = 0) const {
    std::vector<double> w(steps_ + 1, 0.0);
    for (std::size_t k = 0; k < steps_; ++k) w[k + 1] = w[k] + increment(k, channel);
    return w;
  }

  /// Grid index of time t; t must be a multiple of dt within the horizon.
  std::size_t index_of(double t) const {
    require(std::isfinite(t) && t >= 0.0, "BrownianPath: time must be nonnegative");
    const double k = std::nearbyint(t / dt());
    require(std::abs(k * dt() - t) <= 1e-9 * std::max(1.0, t), "BrownianPath: time off the step grid");
    require(k <= static_cast<double>(steps_), "BrownianPath: time beyond the path horizon");
    return static_cast<std::size_t>(k);
  }

 private:
  BrownianStream stream_;
  std::size_t steps_ = 0;
  ChannelLayout layout_;
  std::vector<double> increments_;
};

/// Increments for `steps` steps of size dt, keyed by (seed, trial 0).
inline BrownianPath make_brownian_path(std::uint64_t seed, double dt, std::size_t steps,
                                       ChannelLayout layout = ChannelLayout::common()) {
  return BrownianPath(BrownianStream(StreamKey{seed, 0}, dt), steps, layout);
}

inline BrownianPath make_brownian_path(StreamKey key, double dt, std::size_t steps,
                                       ChannelLayout layout = ChannelLayout::common()) {
  return BrownianPath(BrownianStream(key, dt), steps, layout);
}

}  // namespace csflock
