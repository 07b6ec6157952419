// csflock: command-line front end for the stochastic Cucker-Smale simulator.
//
//   csflock simulate   --preset fig2 --out run/
//   csflock ensemble   --preset fig1 --trials 100 --out run/
//   csflock verify     --out run/
//   csflock thresholds --kernel constant:K=1 --sigma 0.05 --N 50

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "csflock/csflock.hpp"

namespace fs = std::filesystem;
using namespace csflock;

namespace {

enum ExitCode { kOk = 0, kVerifyFailed = 1, kUsage = 2, kBlowUp = 3 };

struct RunSpec {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<double> sigma;
  std::optional<double> output_every;
  std::optional<std::string> kernel;
  std::optional<std::string> noise;
  std::optional<double> coupling;
  std::optional<std::size_t> n;
  std::optional<std::size_t> d;
  std::optional<std::string> scheme;
  std::optional<unsigned> parallelism;
  bool fix_initial = false;
  bool no_ito_correction = false;
  std::string out = ".";
};

void add_common_flags(CLI::App& app, RunSpec& spec) {
  app.add_option("--config", spec.config_path, "JSON configuration file");
  app.add_option("--preset", spec.preset, "Built-in configuration")->check(CLI::IsMember({"fig1", "fig2"}));
  app.add_option("--seed", spec.seed, "Base seed (u64)");
  app.add_option("--trials", spec.trials, "Number of trials");
  app.add_option("--dt", spec.dt, "Time step");
  app.add_option("--T", spec.horizon, "Horizon");
  app.add_option("--sigma", spec.sigma, "Common-noise strength (selects the common noise model)");
  app.add_option("--output-every", spec.output_every, "Output spacing");
  app.add_option("--kernel", spec.kernel, "rational:K=1,c=1,beta=0.25 | singular:K=1,beta=0.5,cap=1e-6 | constant:K=1");
  app.add_option("--noise", spec.noise, "none | common:sigma=S | additive:D=D | multve:D=D,ve=a;b");
  app.add_option("--coupling", spec.coupling, "Coupling scale in front of the alignment sum");
  app.add_option("--N", spec.n, "Particle count");
  app.add_option("--d", spec.d, "Dimension");
  app.add_option("--scheme", spec.scheme, "euler_maruyama_ito | euler_heun_stratonovich | deterministic_euler");
  app.add_option("--parallelism", spec.parallelism, "Worker threads (0 = all cores)");
  app.add_flag("--fix-initial", spec.fix_initial, "Use trial 0's initial state for every trial");
  app.add_option("--out", spec.out, "Output directory");
}

EnsembleConfig default_config() {
  EnsembleConfig c;
  c.model.kernel = ConstantKernel{1.0};
  c.model.noise = CommonStratonovich{0.1};
  c.model.n = 5;
  c.model.d = 2;
  c.dt = 1e-3;
  c.horizon = 1.0;
  c.output_times = uniform_grid(1.0, 0.01);
  c.n_trials = 100;
  return c;
}

/// Defaults, then preset or config file, then flag overrides.
EnsembleConfig resolve(const RunSpec& spec) {
  if (!spec.preset.empty() && !spec.config_path.empty())
    throw InvalidArgument("--preset and --config are mutually exclusive");
  EnsembleConfig c = default_config();
  if (!spec.preset.empty()) c = preset(spec.preset);
  if (!spec.config_path.empty()) c = load_config_file(spec.config_path);

  if (spec.seed) c.base_seed = *spec.seed;
  if (spec.trials) c.n_trials = *spec.trials;
  if (spec.dt) c.dt = *spec.dt;
  const bool grid_changed = spec.horizon || spec.output_every;
  if (spec.horizon) c.horizon = *spec.horizon;
  if (grid_changed) {
    const double every = spec.output_every.value_or(c.output_times.size() > 1 ? c.output_times[1] - c.output_times[0]
                                                                             : c.horizon / 100.0);
    c.output_times = uniform_grid(c.horizon, every);
    std::erase_if(c.snapshot_times, [&](double t) { return t > c.horizon; });
  }
  if (spec.kernel) c.model.kernel = parse_kernel_spec(*spec.kernel);
  if (spec.noise) c.model.noise = parse_noise_spec(*spec.noise);
  if (spec.sigma) c.model.noise = CommonStratonovich{*spec.sigma};
  if (spec.coupling) c.model.coupling_scale = *spec.coupling;
  if (spec.n) c.model.n = *spec.n;
  if (spec.d) c.model.d = *spec.d;
  if (auto* mv = std::get_if<MultiplicativeVe>(&c.model.noise); mv && mv->v_e.empty()) mv->v_e.assign(c.model.d, 0.0);
  if (spec.scheme) c.scheme = scheme_from_string(*spec.scheme);
  if (spec.parallelism) c.parallelism = *spec.parallelism;
  if (spec.fix_initial) c.fix_initial = true;
  if (spec.no_ito_correction) c.model.ito_correction = false;
  c.validate();
  return c;
}

fs::path prepare_out(const RunSpec& spec) {
  fs::path dir(spec.out);
  fs::create_directories(dir);
  return dir;
}

void write_snapshots(const Trajectory& traj, const EnsembleConfig& cfg, const fs::path& dir) {
  for (double t : cfg.snapshot_times) {
    for (const auto& s : traj.snapshots) {
      if (std::abs(s.t - t) <= 1e-9 * std::max(1.0, t)) {
        write_text(dir / snapshot_filename(t), snapshot_csv(s, cfg));
        std::cout << "wrote " << (dir / snapshot_filename(t)).string() << "\n";
        break;
      }
    }
  }
}

int cmd_simulate(const RunSpec& spec, bool oracle) {
  const auto cfg = resolve(spec);
  const auto dir = prepare_out(spec);
  const auto traj = run_trial(cfg, 0, !cfg.snapshot_times.empty());

  std::optional<std::vector<double>> oracle_column;
  if (oracle) {
    const auto* k = std::get_if<ConstantKernel>(&cfg.model.kernel);
    const bool common = std::holds_alternative<CommonStratonovich>(cfg.model.noise);
    if (!k || !(common || std::holds_alternative<NoNoise>(cfg.model.noise)))
      throw InvalidArgument("--oracle needs a constant kernel with common or no noise");
    const double sigma = common ? std::get<CommonStratonovich>(cfg.model.noise).sigma : 0.0;
    const double c = k->K * cfg.model.coupling_scale;
    std::vector<double> col;
    for (std::size_t i = 0; i < traj.times.size(); ++i)
      col.push_back(pathwise_v_exact_const_at(traj.diagnostics.v2_centered.front(), cfg.model.n, sigma, c,
                                              traj.times[i] - traj.times.front(), traj.diagnostics.w_t[i]));
    oracle_column = std::move(col);
  }
  write_text(dir / "trajectory.csv", trajectory_csv(traj, cfg, oracle_column));
  std::cout << "wrote " << (dir / "trajectory.csv").string() << "\n";
  write_snapshots(traj, cfg, dir);
  if (traj.divergence) {
    std::cerr << "error: state blew up at step " << traj.divergence->step_index << " (t="
              << format_double(traj.divergence->time) << ")\n";
    return kBlowUp;
  }
  return kOk;
}

int cmd_ensemble(const RunSpec& spec) {
  const auto cfg = resolve(spec);
  const auto dir = prepare_out(spec);
  const auto result = run_ensemble(cfg);

  auto doc = to_json_value(result);
  if (!result.empty_aggregate() && result.times.size() >= 20) {
    const auto verdict = classify_flocking(result.diagnostics());
    doc["verdict"] = {{"velocity_alignment", to_string(verdict.velocity_alignment)},
                      {"group_forming", to_string(verdict.group_forming)},
                      {"dispersion_log_slope", verdict.dispersion_log_slope},
                      {"pair_distance_log_slope", verdict.pair_distance_log_slope},
                      {"window_start", verdict.window_start}};
    std::cout << "velocity_alignment: " << to_string(verdict.velocity_alignment)
              << "\ngroup_forming: " << to_string(verdict.group_forming) << "\n";
  }
  write_text(dir / "ensemble.json", doc.dump(2) + "\n");
  write_text(dir / "ensemble.csv", ensemble_csv(result));
  std::cout << "wrote " << (dir / "ensemble.json").string() << "\nwrote " << (dir / "ensemble.csv").string() << "\n";
  if (!cfg.snapshot_times.empty()) write_snapshots(run_trial(cfg, 0, true), cfg, dir);
  std::cout << "trials: " << cfg.n_trials << ", diverged: " << result.diverged_count << "\n";
  if (result.empty_aggregate()) std::cerr << "warning: every trial diverged; aggregates are empty\n";
  return kOk;
}

int cmd_verify(const RunSpec& spec) {
  VerifyOptions opt;
  if (spec.n) opt.n = *spec.n;
  if (spec.d) opt.d = *spec.d;
  if (spec.dt) opt.dt = *spec.dt;
  if (spec.seed) opt.seed = *spec.seed;
  opt.ito_correction = !spec.no_ito_correction;
  const auto dir = prepare_out(spec);
  const auto checks = run_verification(opt);
  const auto report = verification_report(checks);
  write_text(dir / "verify_report.json", report.dump(2) + "\n");
  for (const auto& c : checks)
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  measured=" << format_double(c.measured)
              << " bound=" << format_double(c.bound) << "\n";
  std::cout << "wrote " << (dir / "verify_report.json").string() << "\n";
  for (const auto& c : checks) {
    if (!c.passed) {
      std::cerr << "verification failed: " << c.name << "\n";
      return kVerifyFailed;
    }
  }
  return kOk;
}

int cmd_thresholds(const RunSpec& spec) {
  const auto cfg = resolve(spec);
  const auto bounds = kernel_bounds(cfg.model.kernel);
  const double scale = cfg.model.coupling_scale;
  const auto th = thresholds(cfg.model.n, KernelBounds{bounds.alpha * scale, bounds.psi_star * scale});
  std::cout << "N = " << cfg.model.n << "\nalpha = " << format_double(bounds.alpha * scale)
            << "\npsi_star = " << format_double(bounds.psi_star * scale)
            << "\nsigma_flock_max = " << format_double(th.sigma_flock_max) << "\n";
  if (th.nonflock_applicable) {
    std::cout << "sigma_nonflock_min = " << format_double(th.sigma_nonflock_min) << "\n";
  } else {
    std::cout << "sigma_nonflock_min = n/a (sup psi is infinite: the large-noise non-flocking result needs a "
                 "bounded communication rate; cap the singular kernel to use it)\n";
  }
  if (const auto* common = std::get_if<CommonStratonovich>(&cfg.model.noise)) {
    std::cout << "sigma = " << format_double(common->sigma) << "\nregime: " << to_string(classify_regime(common->sigma, th))
              << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic Cucker-Smale flocking simulator"};
  app.require_subcommand(1);
  RunSpec spec;
  bool oracle = false;

  auto* simulate = app.add_subcommand("simulate", "Integrate one trajectory and write trajectory.csv");
  add_common_flags(*simulate, spec);
  simulate->add_flag("--oracle", oracle, "Add the constant-kernel pathwise closed form as a column");

  auto* ensemble = app.add_subcommand("ensemble", "Monte Carlo ensemble; writes ensemble.json and ensemble.csv");
  add_common_flags(*ensemble, spec);

  auto* verify = app.add_subcommand("verify", "Run the invariant and oracle suite; writes verify_report.json");
  add_common_flags(*verify, spec);
  verify->add_flag("--no-ito-correction", spec.no_ito_correction, "Negative control: drop the Ito correction");

  auto* thresholds_cmd = app.add_subcommand("thresholds", "Noise thresholds for flocking and non-flocking");
  add_common_flags(*thresholds_cmd, spec);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(spec, oracle);
    if (*ensemble) return cmd_ensemble(spec);
    if (*verify) return cmd_verify(spec);
    if (*thresholds_cmd) return cmd_thresholds(spec);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const BlowUp& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBlowUp;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
