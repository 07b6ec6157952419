#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <type_traits>
#include <variant>

#include "csflock/error.hpp"

namespace csflock {

/// psi(s) = K / (c + s^2)^beta
struct RationalKernel {
  double K = 1.0;
  double c = 1.0;
  double beta = 0.25;
};

/// psi(s) = K / max(s, cap_s)^(2 beta). cap_s == 0 leaves the kernel unclamped
/// (unbounded at the origin whenever beta > 0).
struct SingularKernel {
  double K = 1.0;
  double beta = 0.5;
  double cap_s = 1e-6;
};

/// psi(s) = K
struct ConstantKernel {
  double K = 1.0;
};

/// Communication rate psi: [0, inf) -> [0, inf).
using Kernel = std::variant<RationalKernel, SingularKernel, ConstantKernel>;

/// Supremum (alpha) and infimum (psi_star) of a kernel over [0, inf).
struct KernelBounds {
  double alpha = 0.0;
  double psi_star = 0.0;
};

inline void validate(const Kernel& kernel) {
  std::visit(
      [](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        require(std::isfinite(k.K) && k.K >= 0.0, "kernel: K must be finite and nonnegative");
        if constexpr (std::is_same_v<K, RationalKernel>) {
          require(std::isfinite(k.c) && k.c > 0.0, "rational kernel: c must be positive");
          require(std::isfinite(k.beta) && k.beta >= 0.0, "rational kernel: beta must be >= 0");
        } else if constexpr (std::is_same_v<K, SingularKernel>) {
          require(std::isfinite(k.beta) && k.beta >= 0.0, "singular kernel: beta must be >= 0");
          require(std::isfinite(k.cap_s) && k.cap_s >= 0.0, "singular kernel: cap_s must be >= 0");
        }
      },
      kernel);
}

/// Evaluates psi(s), the influence weight between two particles at distance s.
inline double kernel_eval(const Kernel& kernel, double s) {
  require(std::isfinite(s), "kernel_eval: distance must be finite");
  require(s >= 0.0, "kernel_eval: distance must be nonnegative");
  return std::visit(
      [s](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, RationalKernel>) {
          return k.K / std::pow(k.c + s * s, k.beta);
        } else if constexpr (std::is_same_v<K, SingularKernel>) {
          const double r = std::max(s, k.cap_s);
          return k.K / std::pow(r, 2.0 * k.beta);
        } else {
          return k.K;
        }
      },
      kernel);
}

/// Same as kernel_eval but takes the squared distance and skips the checks.
/// Used on the hot path of the drift.
inline double kernel_eval_sq(const Kernel& kernel, double s2) noexcept {
  if (const auto* r = std::get_if<RationalKernel>(&kernel)) {
    if (r->beta == 0.25) return r->K / std::sqrt(std::sqrt(r->c + s2));
    if (r->beta == 0.5) return r->K / std::sqrt(r->c + s2);
    if (r->beta == 1.0) return r->K / (r->c + s2);
    return r->K / std::pow(r->c + s2, r->beta);
  }
  if (const auto* c = std::get_if<ConstantKernel>(&kernel)) return c->K;
  const auto& g = std::get<SingularKernel>(kernel);
  const double cap2 = g.cap_s * g.cap_s;
  return g.K / std::pow(std::max(s2, cap2), g.beta);
}

inline bool is_constant(const Kernel& kernel) noexcept {
  return std::holds_alternative<ConstantKernel>(kernel);
}

/// alpha = sup psi, psi_star = inf psi. Every family is nonincreasing, so the
/// supremum sits at the origin (or at the cap) and the infimum at infinity.
inline KernelBounds kernel_bounds(const Kernel& kernel) {
  validate(kernel);
  return std::visit(
      [](const auto& k) -> KernelBounds {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, RationalKernel>) {
          const double alpha = k.K / std::pow(k.c, k.beta);
          return {alpha, k.beta == 0.0 ? alpha : 0.0};
        } else if constexpr (std::is_same_v<K, SingularKernel>) {
          if (k.beta == 0.0) return {k.K, k.K};
          const double alpha = k.cap_s > 0.0 ? k.K / std::pow(k.cap_s, 2.0 * k.beta)
                                             : std::numeric_limits<double>::infinity();
          return {alpha, 0.0};
        } else {
          return {k.K, k.K};
        }
      },
      kernel);
}

inline std::string kernel_name(const Kernel& kernel) {
  switch (kernel.index()) {
    case 0: return "rational";
    case 1: return "singular";
    default: return "constant";
  }
}

}  // namespace csflock
