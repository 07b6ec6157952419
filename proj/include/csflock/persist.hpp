#pragma once

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "csflock/config.hpp"
#include "csflock/ensemble.hpp"
#include "csflock/error.hpp"
#include "csflock/integrators.hpp"

namespace csflock {

inline constexpr int kSchemaVersion = 1;

/// Shortest round-trip decimal form; locale independent.
inline std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// ensemble.json

inline json to_json_value(const SeriesStats& s) {
  return {{"mean", s.mean}, {"stderr", s.std_error}, {"used", s.used}, {"diverged", s.diverged}};
}

inline SeriesStats series_from_json(const json& j) {
  SeriesStats s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.std_error = j.at("stderr").get<std::vector<double>>();
  s.used = j.at("used").get<std::size_t>();
  s.diverged = j.at("diverged").get<std::size_t>();
  return s;
}

inline json to_json_value(const EnsembleResult& r) {
  json divergences = json::array();
  for (const auto& d : r.divergences) divergences.push_back({{"trial", d.trial}, {"step", d.step}, {"time", d.time}});
  json trials = json::array();
  for (const auto& t : r.terminal)
    trials.push_back({{"trial", t.trial},
                      {"dispersion", t.dispersion},
                      {"v2_centered", t.v2_centered},
                      {"mean_pair_distance", t.mean_pair_distance},
                      {"initial_v2_centered", t.initial_v2_centered}});
  return {{"schema_version", kSchemaVersion},
          {"generator", r.version},
          {"config", to_json_value(r.config)},
          {"grid", r.times},
          {"aggregates",
           {{"dispersion", to_json_value(r.dispersion)},
            {"v2_centered", to_json_value(r.v2_centered)},
            {"pair_distance", to_json_value(r.pair_distance)}}},
          {"diverged", {{"count", r.diverged_count}, {"trials", divergences}}},
          {"trials", trials}};
}

inline EnsembleResult ensemble_result_from_json(const json& j) {
  if (!j.is_object() || !j.contains("schema_version")) throw SchemaError("ensemble document: missing schema_version");
  const int version = j.at("schema_version").get<int>();
  if (version > kSchemaVersion)
    throw SchemaError("ensemble document: schema_version " + std::to_string(version) +
                      " is newer than the supported version " + std::to_string(kSchemaVersion));
  if (version < 1) throw SchemaError("ensemble document: invalid schema_version " + std::to_string(version));
  try {
    EnsembleResult r;
    r.version = j.at("generator").get<std::string>();
    r.config = ensemble_config_from_json(j.at("config"));
    r.times = j.at("grid").get<std::vector<double>>();
    const auto& agg = j.at("aggregates");
    r.dispersion = series_from_json(agg.at("dispersion"));
    r.v2_centered = series_from_json(agg.at("v2_centered"));
    r.pair_distance = series_from_json(agg.at("pair_distance"));
    r.diverged_count = j.at("diverged").at("count").get<std::size_t>();
    for (const auto& d : j.at("diverged").at("trials"))
      r.divergences.push_back({d.at("trial").get<std::size_t>(), d.at("step").get<std::size_t>(),
                               d.at("time").get<double>()});
    for (const auto& t : j.value("trials", json::array()))
      r.terminal.push_back({t.at("trial").get<std::size_t>(), t.at("dispersion").get<double>(),
                            t.at("v2_centered").get<double>(), t.at("mean_pair_distance").get<double>(),
                            t.at("initial_v2_centered").get<double>()});
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("ensemble document: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw SchemaError(std::string("ensemble document: ") + e.what());
  }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

inline void persist(const EnsembleResult& result, const std::filesystem::path& path) {
  write_text(path, to_json_value(result).dump(2) + "\n");
}

inline EnsembleResult load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("'" + path.string() + "' is not a complete JSON document: " + e.what());
  }
  return ensemble_result_from_json(j);
}

// ---------------------------------------------------------------------------
// CSV. Every file starts with '#' provenance lines: the generator tag and the
// effective configuration as one-line JSON.

inline std::string provenance_header(const EnsembleConfig& cfg, const std::string& extra = {}) {
  std::string s = std::string("# ") + kVersionTag + "\n# config: " + to_json_value(cfg).dump() + "\n";
  if (!extra.empty()) s += "# " + extra + "\n";
  return s;
}

inline std::string ensemble_csv(const EnsembleResult& r) {
  std::ostringstream out;
  out << provenance_header(r.config);
  out << "t,mean_dispersion,stderr_dispersion,mean_v2,stderr_v2,mean_pairdist,diverged_count\n";
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    auto col = [&](const std::vector<double>& v) { return k < v.size() ? format_double(v[k]) : std::string(); };
    out << format_double(r.times[k]) << ',' << col(r.dispersion.mean) << ',' << col(r.dispersion.std_error) << ','
        << col(r.v2_centered.mean) << ',' << col(r.v2_centered.std_error) << ',' << col(r.pair_distance.mean) << ','
        << r.diverged_count << '\n';
  }
  return out.str();
}

/// trajectory.csv: t, v2_centered, dispersion, max_pair_dist, w_t and, when
/// given, an oracle column aligned with the samples.
inline std::string trajectory_csv(const Trajectory& traj, const EnsembleConfig& cfg,
                                  const std::optional<std::vector<double>>& oracle = std::nullopt,
                                  const std::string& oracle_name = "oracle_v2_exact") {
  std::ostringstream out;
  out << provenance_header(cfg, "trial 0");
  out << "t,v2_centered,dispersion,max_pair_dist,w_t";
  if (oracle) out << ',' << oracle_name;
  out << '\n';
  const auto& d = traj.diagnostics;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    out << format_double(traj.times[k]) << ',' << format_double(d.v2_centered[k]) << ','
        << format_double(d.dispersion[k]) << ',' << format_double(d.max_pair_dist[k]) << ','
        << format_double(d.w_t[k]);
    if (oracle) out << ',' << format_double((*oracle)[k]);
    out << '\n';
  }
  return out.str();
}

/// One row per particle: x components then v components.
inline std::string snapshot_csv(const SystemState& s, const EnsembleConfig& cfg) {
  std::ostringstream out;
  out << provenance_header(cfg, "trial 0 snapshot at t=" + format_double(s.t));
  for (std::size_t k = 0; k < s.d(); ++k) out << (k ? "," : "") << 'x' << k;
  for (std::size_t k = 0; k < s.d(); ++k) out << ",v" << k;
  out << '\n';
  for (std::size_t i = 0; i < s.n(); ++i) {
    for (std::size_t k = 0; k < s.d(); ++k) out << (k ? "," : "") << format_double(s.x(i)[k]);
    for (std::size_t k = 0; k < s.d(); ++k) out << ',' << format_double(s.v(i)[k]);
    out << '\n';
  }
  return out.str();
}

inline std::string snapshot_filename(double t) { return "snapshot_t" + format_double(t) + ".csv"; }

}  // namespace csflock
