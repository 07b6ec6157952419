#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace csflock {

/// Precondition or configuration violation detected at an API boundary.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A time step produced a non-finite state.
class BlowUp : public std::runtime_error {
 public:
  BlowUp(std::size_t step_index, double time)
      : std::runtime_error("non-finite state at step " + std::to_string(step_index) +
                           " (t=" + std::to_string(time) + ")"),
        step_index_(step_index),
        time_(time) {}

  std::size_t step_index() const noexcept { return step_index_; }
  double time() const noexcept { return time_; }

 private:
  std::size_t step_index_;
  double time_;
};

/// Malformed, truncated or version-incompatible persisted document.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace csflock
