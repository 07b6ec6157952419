#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "csflock/error.hpp"

namespace csflock {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless:
/// every output block is a pure function of (counter, key).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) noexcept {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      ctr = round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  static Counter round(const Counter& c, const Key& k) noexcept {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// What a random draw is used for. Separate purposes never share counters.
enum class Purpose : std::uint8_t { Init = 1, Noise = 2, Bridge = 3 };

/// Identifies one independent family of streams: a run seed plus a trial index.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint32_t trial = 0;
};

/// Counter layout:
///   word0 = index bits 0..31
///   word1 = index bits 32..47 | level << 16 | purpose << 24
///   word2 = channel
///   word3 = trial
/// The key is the 64-bit seed. The map (trial, purpose, level, channel, index)
/// -> counter is injective over the accepted ranges, so different trials or
/// purposes can never reuse a block.
inline Philox4x32::Counter encode_counter(const StreamKey& key, Purpose purpose, std::uint32_t level,
                                          std::uint64_t channel, std::uint64_t index) {
  constexpr std::uint64_t kMaxIndex = std::uint64_t{1} << 48;
  require(index < kMaxIndex, "random stream: index exceeds 2^48");
  require(level < 256, "random stream: refinement level exceeds 255");
  require(channel <= 0xFFFFFFFFull, "random stream: channel exceeds 2^32");
  return {static_cast<std::uint32_t>(index),
          static_cast<std::uint32_t>(index >> 32) | (level << 16) |
              (static_cast<std::uint32_t>(purpose) << 24),
          static_cast<std::uint32_t>(channel), key.trial};
}

inline Philox4x32::Key encode_key(const StreamKey& key) noexcept {
  return {static_cast<std::uint32_t>(key.seed), static_cast<std::uint32_t>(key.seed >> 32)};
}

namespace detail {

/// 53-bit uniform in [0, 1) from two 32-bit words.
inline double to_unit(std::uint32_t a, std::uint32_t b) noexcept {
  const std::uint64_t bits = (static_cast<std::uint64_t>(a >> 5) << 26) | (b >> 6);
  return static_cast<double>(bits) * 0x1.0p-53;
}

}  // namespace detail

/// Uniform [0, 1) draw addressed by its coordinates.
inline double uniform_at(const StreamKey& key, Purpose purpose, std::uint32_t level,
                         std::uint64_t channel, std::uint64_t index) {
  const auto out = Philox4x32::block(encode_counter(key, purpose, level, channel, index),
                                     encode_key(key));
  return detail::to_unit(out[0], out[1]);
}

/// Standard normal draw addressed by its coordinates (Box-Muller on one block).
inline double normal_at(const StreamKey& key, Purpose purpose, std::uint32_t level,
                        std::uint64_t channel, std::uint64_t index) {
  const auto out = Philox4x32::block(encode_counter(key, purpose, level, channel, index),
                                     encode_key(key));
  const double u1 = 1.0 - detail::to_unit(out[0], out[1]);  // (0, 1]
  const double u2 = detail::to_unit(out[2], out[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace csflock
