#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "csflock/ensemble.hpp"
#include "csflock/error.hpp"
#include "csflock/integrators.hpp"
#include "csflock/kernel.hpp"
#include "csflock/model.hpp"

namespace csflock {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Kernel / noise <-> JSON

inline json to_json_value(const Kernel& kernel) {
  return std::visit(
      [](const auto& k) -> json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, RationalKernel>) {
          return {{"type", "rational"}, {"K", k.K}, {"c", k.c}, {"beta", k.beta}};
        } else if constexpr (std::is_same_v<K, SingularKernel>) {
          return {{"type", "singular"}, {"K", k.K}, {"beta", k.beta}, {"cap_s", k.cap_s}};
        } else {
          return {{"type", "constant"}, {"K", k.K}};
        }
      },
      kernel);
}

inline Kernel kernel_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "rational")
    return RationalKernel{j.value("K", 1.0), j.value("c", 1.0), j.value("beta", 0.25)};
  if (type == "singular")
    return SingularKernel{j.value("K", 1.0), j.value("beta", 0.5), j.value("cap_s", 1e-6)};
  if (type == "constant") return ConstantKernel{j.value("K", 1.0)};
  throw InvalidArgument("unknown kernel type '" + type + "'");
}

inline json to_json_value(const NoiseModel& noise) {
  return std::visit(
      [](const auto& m) -> json {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, NoNoise>) {
          return {{"type", "none"}};
        } else if constexpr (std::is_same_v<M, CommonStratonovich>) {
          return {{"type", "common"}, {"sigma", m.sigma}};
        } else if constexpr (std::is_same_v<M, AdditiveIndependent>) {
          return {{"type", "additive"}, {"D", m.D}};
        } else {
          return {{"type", "multve"}, {"D", m.D}, {"v_e", m.v_e}};
        }
      },
      noise);
}

inline NoiseModel noise_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "none") return NoNoise{};
  if (type == "common") return CommonStratonovich{j.at("sigma").get<double>()};
  if (type == "additive") return AdditiveIndependent{j.at("D").get<double>()};
  if (type == "multve") return MultiplicativeVe{j.at("D").get<double>(), j.at("v_e").get<std::vector<double>>()};
  throw InvalidArgument("unknown noise type '" + type + "'");
}

// ---------------------------------------------------------------------------
// Compact command-line specs: "rational:K=1,c=1,beta=0.25", "common:sigma=0.3",
// "multve:D=0.5,ve=1;0".

namespace detail {

inline std::pair<std::string, std::map<std::string, std::string>> split_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  std::pair<std::string, std::map<std::string, std::string>> out{spec.substr(0, colon), {}};
  if (colon == std::string::npos) return out;
  std::stringstream rest(spec.substr(colon + 1));
  std::string item;
  while (std::getline(rest, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InvalidArgument("malformed spec item '" + item + "' in '" + spec + "'");
    out.second[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

inline double spec_number(const std::map<std::string, std::string>& kv, const std::string& key, double fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t used = 0;
    const double value = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw InvalidArgument("spec value for '" + key + "' is not a number: '" + it->second + "'");
  }
}

inline void only_keys(const std::map<std::string, std::string>& kv, std::initializer_list<const char*> allowed,
                      const std::string& spec) {
  for (const auto& [k, v] : kv) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw InvalidArgument("unknown key '" + k + "' in spec '" + spec + "'");
  }
}

}  // namespace detail

inline Kernel parse_kernel_spec(const std::string& spec) {
  const auto [name, kv] = detail::split_spec(spec);
  Kernel k;
  if (name == "rational") {
    detail::only_keys(kv, {"K", "c", "beta"}, spec);
    k = RationalKernel{detail::spec_number(kv, "K", 1.0), detail::spec_number(kv, "c", 1.0),
                       detail::spec_number(kv, "beta", 0.25)};
  } else if (name == "singular") {
    detail::only_keys(kv, {"K", "beta", "cap", "cap_s"}, spec);
    k = SingularKernel{detail::spec_number(kv, "K", 1.0), detail::spec_number(kv, "beta", 0.5),
                       detail::spec_number(kv, "cap_s", detail::spec_number(kv, "cap", 1e-6))};
  } else if (name == "constant" || name == "const") {
    detail::only_keys(kv, {"K"}, spec);
    k = ConstantKernel{detail::spec_number(kv, "K", 1.0)};
  } else {
    throw InvalidArgument("unknown kernel '" + name + "' (rational | singular | constant)");
  }
  validate(k);
  return k;
}

inline NoiseModel parse_noise_spec(const std::string& spec) {
  const auto [name, kv] = detail::split_spec(spec);
  if (name == "none") {
    detail::only_keys(kv, {}, spec);
    return NoNoise{};
  }
  if (name == "common") {
    detail::only_keys(kv, {"sigma"}, spec);
    return CommonStratonovich{detail::spec_number(kv, "sigma", 0.1)};
  }
  if (name == "additive") {
    detail::only_keys(kv, {"D"}, spec);
    return AdditiveIndependent{detail::spec_number(kv, "D", 0.1)};
  }
  if (name == "multve") {
    detail::only_keys(kv, {"D", "ve"}, spec);
    MultiplicativeVe m{detail::spec_number(kv, "D", 0.1), {}};
    if (auto it = kv.find("ve"); it != kv.end()) {
      std::stringstream parts(it->second);
      std::string p;
      while (std::getline(parts, p, ';')) m.v_e.push_back(detail::spec_number({{"ve", p}}, "ve", 0.0));
    }
    return m;
  }
  throw InvalidArgument("unknown noise '" + name + "' (none | common | additive | multve)");
}

// ---------------------------------------------------------------------------
// EnsembleConfig <-> JSON

inline json to_json_value(const ModelConfig& m) {
  return {{"kernel", to_json_value(m.kernel)},
          {"noise", to_json_value(m.noise)},
          {"coupling_scale", m.coupling_scale},
          {"N", m.n},
          {"d", m.d},
          {"ito_correction", m.ito_correction}};
}

inline ModelConfig model_from_json(const json& j) {
  ModelConfig m;
  m.kernel = kernel_from_json(j.at("kernel"));
  m.noise = noise_from_json(j.at("noise"));
  m.coupling_scale = j.value("coupling_scale", 1.0);
  m.n = j.at("N").get<std::size_t>();
  m.d = j.at("d").get<std::size_t>();
  m.ito_correction = j.value("ito_correction", true);
  if (auto* mv = std::get_if<MultiplicativeVe>(&m.noise); mv && mv->v_e.empty()) mv->v_e.assign(m.d, 0.0);
  return m;
}

namespace detail {

inline json rows_to_json(const Field& f, std::size_t n, std::size_t d) {
  json rows = json::array();
  for (std::size_t i = 0; i < n; ++i) rows.push_back(std::vector<double>(f.begin() + i * d, f.begin() + (i + 1) * d));
  return rows;
}

inline Field rows_from_json(const json& rows, std::size_t n, std::size_t d) {
  require(rows.is_array() && rows.size() == n, "explicit init: expected N rows");
  Field f;
  for (const auto& r : rows) {
    const auto v = r.get<std::vector<double>>();
    require(v.size() == d, "explicit init: each row needs d entries");
    f.insert(f.end(), v.begin(), v.end());
  }
  return f;
}

inline std::vector<double> bound_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>()};
  return j.get<std::vector<double>>();
}

}  // namespace detail

/// Full configuration echo. `parallelism` is deliberately left out: it cannot
/// change results, and leaving it out keeps outputs byte-identical across it.
inline json to_json_value(const EnsembleConfig& c) {
  json init;
  if (const auto* box = std::get_if<BoxInit>(&c.init)) {
    init = {{"type", "box"}, {"x_low", box->x_low}, {"x_high", box->x_high},
            {"v_low", box->v_low}, {"v_high", box->v_high}};
  } else {
    const auto& s = std::get<ExplicitInit>(c.init).state;
    init = {{"type", "explicit"},
            {"x", detail::rows_to_json(s.positions(), s.n(), s.d())},
            {"v", detail::rows_to_json(s.velocities(), s.n(), s.d())}};
  }
  return {{"model", to_json_value(c.model)},
          {"scheme", to_string(c.scheme)},
          {"dt", c.dt},
          {"T", c.horizon},
          {"output_times", c.output_times},
          {"n_trials", c.n_trials},
          {"base_seed", c.base_seed},
          {"init", init},
          {"fix_initial", c.fix_initial},
          {"snapshot_times", c.snapshot_times}};
}

inline EnsembleConfig ensemble_config_from_json(const json& j) {
  EnsembleConfig c;
  c.model = model_from_json(j.at("model"));
  c.scheme = scheme_from_string(j.value("scheme", std::string("euler_maruyama_ito")));
  c.dt = j.at("dt").get<double>();
  c.horizon = j.at("T").get<double>();
  if (j.contains("output_times")) {
    c.output_times = j.at("output_times").get<std::vector<double>>();
  } else if (j.contains("output_every")) {
    c.output_times = uniform_grid(c.horizon, j.at("output_every").get<double>());
  } else {
    c.output_times = uniform_grid(c.horizon, c.horizon / 100.0);
  }
  c.n_trials = j.value("n_trials", std::size_t{100});
  c.base_seed = j.value("base_seed", std::uint64_t{42});
  c.fix_initial = j.value("fix_initial", false);
  c.parallelism = j.value("parallelism", 0u);
  c.snapshot_times = j.value("snapshot_times", std::vector<double>{});
  if (j.contains("init")) {
    const auto& init = j.at("init");
    const auto type = init.value("type", std::string("box"));
    if (type == "box") {
      BoxInit box;
      if (init.contains("x_low")) box.x_low = detail::bound_from_json(init.at("x_low"));
      if (init.contains("x_high")) box.x_high = detail::bound_from_json(init.at("x_high"));
      if (init.contains("v_low")) box.v_low = detail::bound_from_json(init.at("v_low"));
      if (init.contains("v_high")) box.v_high = detail::bound_from_json(init.at("v_high"));
      c.init = box;
    } else if (type == "explicit") {
      const std::size_t n = c.model.n, d = c.model.d;
      c.init = ExplicitInit{SystemState(n, d, detail::rows_from_json(init.at("x"), n, d),
                                        detail::rows_from_json(init.at("v"), n, d))};
    } else {
      throw InvalidArgument("unknown init type '" + type + "'");
    }
  }
  return c;
}

inline EnsembleConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file '" + path + "'");
  try {
    return ensemble_config_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw InvalidArgument("config file '" + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Reconstructions of the two reference experiments. Their step size and RNG
// were never reported; dt below is ours.

/// Non-flocking example: psi(s) = 1/(1+s^2)^0.25, sigma = 0.3, N = 50 in R^2.
inline EnsembleConfig preset_fig1() {
  EnsembleConfig c;
  c.model.kernel = RationalKernel{1.0, 1.0, 0.25};
  c.model.noise = CommonStratonovich{0.3};
  c.model.n = 50;
  c.model.d = 2;
  c.dt = 1e-4;
  c.horizon = 0.2;
  c.output_times = uniform_grid(0.2, 0.01);
  c.n_trials = 100;
  c.init = BoxInit{{0.0}, {0.1}, {0.0}, {0.1}};
  return c;
}

/// Flocking example: psi = 1, sigma = 0.05, N = 50 in R^3.
inline EnsembleConfig preset_fig2() {
  EnsembleConfig c;
  c.model.kernel = ConstantKernel{1.0};
  c.model.noise = CommonStratonovich{0.05};
  c.model.n = 50;
  c.model.d = 3;
  c.dt = 1e-3;
  c.horizon = 1.0;
  c.output_times = uniform_grid(1.0, 0.01);
  c.n_trials = 100;
  c.init = BoxInit{{0.0}, {1.0}, {0.0}, {1.0}};
  c.snapshot_times = {0.0, 0.02, 0.5, 1.0};
  return c;
}

inline EnsembleConfig preset(const std::string& name) {
  if (name == "fig1") return preset_fig1();
  if (name == "fig2") return preset_fig2();
  throw InvalidArgument("unknown preset '" + name + "' (fig1 | fig2)");
}

}  // namespace csflock
