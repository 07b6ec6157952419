#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "csflock/error.hpp"
#include "csflock/kernel.hpp"
#include "csflock/state.hpp"

namespace csflock {

/// Deterministic alignment dynamics, no noise.
struct NoNoise {};

/// sigma * sum_j (v_j - v_i) o dw_t with one scalar Wiener process shared by
/// every particle (Stratonovich).
struct CommonStratonovich {
  double sigma = 0.1;
};

/// sqrt(D) dw_i with N independent d-dimensional Wiener processes (Ito).
struct AdditiveIndependent {
  double D = 0.1;
};

/// D (v_i - v_e) dw_i with N independent scalar Wiener processes (Ito).
struct MultiplicativeVe {
  double D = 0.1;
  std::vector<double> v_e;
};

using NoiseModel = std::variant<NoNoise, CommonStratonovich, AdditiveIndependent, MultiplicativeVe>;

/// Number of scalar Wiener channels a noise model consumes.
inline std::size_t channel_count(const NoiseModel& noise, std::size_t n, std::size_t d) {
  switch (noise.index()) {
    case 0: return 0;
    case 1: return 1;
    case 2: return n * d;
    default: return n;
  }
}

inline std::string noise_name(const NoiseModel& noise) {
  static const char* names[] = {"none", "common", "additive", "multve"};
  return names[noise.index()];
}

struct ModelConfig {
  Kernel kernel = ConstantKernel{};
  NoiseModel noise = NoNoise{};
  /// Prefactor of the alignment sum: 1 for the common-noise model, lambda/N for
  /// the classical normalised systems.
  double coupling_scale = 1.0;
  std::size_t n = 2;
  std::size_t d = 1;
  /// Adds the Stratonovich-to-Ito drift in Euler-Maruyama steps. Switching it
  /// off integrates the wrong SDE; it exists as a negative control.
  bool ito_correction = true;

  void validate() const {
    csflock::validate(kernel);
    require(std::isfinite(coupling_scale) && coupling_scale > 0.0,
            "ModelConfig: coupling_scale must be positive");
    require(n >= 2, "ModelConfig: N must be at least 2");
    require(d >= 1, "ModelConfig: d must be at least 1");
    std::visit(
        [this](const auto& m) {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, CommonStratonovich>) {
            require(std::isfinite(m.sigma) && m.sigma > 0.0, "common noise: sigma must be > 0");
          } else if constexpr (std::is_same_v<M, AdditiveIndependent>) {
            require(std::isfinite(m.D) && m.D > 0.0, "additive noise: D must be > 0");
          } else if constexpr (std::is_same_v<M, MultiplicativeVe>) {
            require(std::isfinite(m.D) && m.D > 0.0, "multiplicative noise: D must be > 0");
            require(m.v_e.size() == d, "multiplicative noise: v_e must have d components");
          }
        },
        noise);
  }
};

namespace detail {

inline void check_finite(const Field& f, const char* what) {
  for (double a : f)
    if (!std::isfinite(a)) throw InvalidArgument(std::string(what) + ": non-finite value");
}

}  // namespace detail

/// Alignment acceleration coupling * sum_j psi(|x_j - x_i|)(v_j - v_i) written
/// into `dv`. Each unordered pair contributes equal and opposite terms, so the
/// rows sum to zero up to rounding.
inline void alignment_into(const SystemState& s, const Kernel& kernel, double coupling, Field& dv) {
  const std::size_t n = s.n(), d = s.d();
  dv.assign(n * d, 0.0);
  const double* x = s.positions().data();
  const double* v = s.velocities().data();
  double* out = dv.data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double dx = x[j * d + k] - x[i * d + k];
        s2 += dx * dx;
      }
      const double w = coupling * kernel_eval_sq(kernel, s2);
      for (std::size_t k = 0; k < d; ++k) {
        const double f = w * (v[j * d + k] - v[i * d + k]);
        out[i * d + k] += f;
        out[j * d + k] -= f;
      }
    }
  }
}

struct Drift {
  Field dx;
  Field dv;
};

/// Deterministic drift: dx_i = v_i, dv_i = alignment. No Ito correction.
inline Drift drift(const SystemState& state, const ModelConfig& config) {
  state.validate();
  require(state.n() == config.n && state.d() == config.d, "drift: state shape differs from config");
  Drift out{state.velocities(), {}};
  alignment_into(state, config.kernel, config.coupling_scale, out.dv);
  detail::check_finite(out.dv, "drift");
  return out;
}

/// g_i = sigma * (S - N v_i), S = sum_j v_j, written into `g`.
inline void diffusion_common_into(const SystemState& s, double sigma, Field& g) {
  const std::size_t n = s.n(), d = s.d();
  const auto sum = row_sum(s.velocities(), n, d);
  const double nn = static_cast<double>(n);
  g.resize(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) g[i * d + k] = sigma * (sum[k] - nn * s.v(i)[k]);
}

/// Diffusion field of the common-noise model against the shared channel.
inline Field diffusion_common(const SystemState& state, double sigma) {
  state.validate();
  Field g;
  diffusion_common_into(state, sigma, g);
  return g;
}

/// c_i = (sigma^2 / 2)(N^2 v_i - N S), the drift added when the Stratonovich
/// system is rewritten in Ito form. Closed form of (1/2)(Dg)g for the linear g.
inline void ito_correction_common_into(const SystemState& s, double sigma, Field& c) {
  const std::size_t n = s.n(), d = s.d();
  const auto sum = row_sum(s.velocities(), n, d);
  const double nn = static_cast<double>(n);
  const double half_s2 = 0.5 * sigma * sigma;
  c.resize(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k)
      c[i * d + k] = half_s2 * (nn * nn * s.v(i)[k] - nn * sum[k]);
}

inline Field ito_correction_common(const SystemState& state, double sigma) {
  state.validate();
  Field c;
  ito_correction_common_into(state, sigma, c);
  return c;
}

/// Diffusion coefficients of the independent-noise models, laid out per channel.
/// ADDITIVE: N*d channels, coefficient sqrt(D) on the matching component.
/// MULTIPLICATIVE_VE: N channels, row i holds D (v_i - v_e) for particle i's
/// scalar process. Both are Ito systems as written.
struct OtherDiffusion {
  enum class Kind { Additive, MultiplicativeVe } kind;
  /// Additive: the scalar sqrt(D). Unused otherwise.
  double amplitude = 0.0;
  /// MultiplicativeVe: N x d coefficients. Empty for additive.
  Field rows;
};

inline OtherDiffusion diffusion_other(const SystemState& state, const NoiseModel& noise) {
  state.validate();
  if (const auto* a = std::get_if<AdditiveIndependent>(&noise)) {
    return {OtherDiffusion::Kind::Additive, std::sqrt(a->D), {}};
  }
  if (const auto* m = std::get_if<MultiplicativeVe>(&noise)) {
    const std::size_t n = state.n(), d = state.d();
    require(m->v_e.size() == d, "diffusion_other: v_e must have d components");
    OtherDiffusion out{OtherDiffusion::Kind::MultiplicativeVe, 0.0, Field(n * d)};
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < d; ++k) out.rows[i * d + k] = m->D * (state.v(i)[k] - m->v_e[k]);
    return out;
  }
  throw InvalidArgument("diffusion_other: only defined for additive and multiplicative noise");
}

}  // namespace csflock
