#pragma once

#include <cstdint>
#include <random>

#include "csflock/state.hpp"

namespace csflock::testing {

/// Random state from the standard library engine, independent of the
/// simulator's own streams.
inline SystemState random_state(std::size_t n, std::size_t d, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  SystemState s(n, d);
  for (auto& a : s.positions()) a = u(rng);
  for (auto& a : s.velocities()) a = u(rng);
  return s;
}

inline SystemState line_state(std::initializer_list<double> x, std::initializer_list<double> v) {
  return SystemState(x.size(), 1, Field(x), Field(v));
}

}  // namespace csflock::testing
