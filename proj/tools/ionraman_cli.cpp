// ionraman - run Raman-driven trapped-ion scenarios from config files or presets
//
// Exit status: 0 success, 2 configuration error, 3 monitor violation,
// 1 anything else.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ionraman/ionraman.hpp"

namespace {

using namespace ionraman;

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMonitor = 3;

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("", "cannot read config file '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

ScenarioConfig load(const std::string& config_path, const std::string& preset_name,
                    const std::vector<std::string>& overrides) {
  ScenarioConfig cfg = config_path.empty() ? preset(preset_name) : parse_config(read_file(config_path));
  for (const auto& o : overrides) apply_override(cfg, o);
  cfg.validate();
  return cfg;
}

void report(const ScenarioResult& r) {
  std::printf("%s: %zu samples, P_down stationary %.6f, wall %.2f s\n",
              r.config.out.empty() ? "(no output)" : r.config.out.c_str(), r.trajectory.times.size(),
              r.stationary_p_down, r.wall_seconds);
  if (r.fit) {
    std::printf("  fit: rabi %.6g rad/s, decay %.6g 1/s, rms %.3g%s\n", r.fit->rabi, r.fit->decay,
                r.fit->residual_rms, r.fit->converged ? "" : " (not converged)");
  }
  std::printf("  monitors: trace drift %.3g, hermiticity %.3g, min eigenvalue %.3g\n",
              r.trajectory.monitors.max_trace_drift, r.trajectory.monitors.max_herm_dev,
              r.trajectory.monitors.min_eigenvalue);
}

int exit_code(const ScenarioError& e) {
  switch (e.kind()) {
    case ScenarioError::Kind::config: return kExitConfig;
    case ScenarioError::Kind::monitor: return kExitMonitor;
    default: return kExitFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Raman-driven three-level trapped ion: effective and full master-equation runs"};
  app.require_subcommand(1);

  std::string config_path, preset_name;
  std::vector<std::string> overrides;
  bool pair = false;

  auto* run = app.add_subcommand("run", "integrate a scenario and write trajectory + summary");
  auto* run_cfg = run->add_option("--config", config_path, "configuration file");
  auto* run_preset = run->add_option("--preset", preset_name, "built-in preset (fig2, fig3, fig4, fig5, crossmodel)");
  run_cfg->excludes(run_preset);
  run->add_option("--override", overrides, "key=value applied after the config (repeatable)");
  run->add_flag("--pair", pair, "run gamma_a/gamma_b = 1 and 3 side by side");

  auto* validate = app.add_subcommand("validate", "parse and check a configuration file");
  validate->add_option("--config", config_path, "configuration file")->required();

  auto* cross = app.add_subcommand("crossmodel", "compare the three-level and effective equations");
  auto* cross_cfg = cross->add_option("--config", config_path, "configuration file");
  auto* cross_preset = cross->add_option("--preset", preset_name, "built-in preset");
  cross_cfg->excludes(cross_preset);
  cross->add_option("--override", overrides, "key=value applied after the config (repeatable)");

  auto* show = app.add_subcommand("show", "print a preset as a configuration document");
  show->add_option("preset", preset_name, "preset name")->required();

  double nu_hz = 0.0, mass_amu = 0.0, wavelength_nm = 0.0, angle_deg = 0.0;
  auto* eta = app.add_subcommand("eta", "single-beam Lamb-Dicke parameter k cos(theta) sqrt(hbar / 2 M nu)");
  eta->add_option("--nu-hz", nu_hz, "trap frequency")->required();
  eta->add_option("--mass-amu", mass_amu, "ion mass")->required();
  eta->add_option("--wavelength-nm", wavelength_nm, "laser wavelength")->required();
  eta->add_option("--angle-deg", angle_deg, "angle between beam and trap axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      if (config_path.empty() && preset_name.empty()) throw ConfigError("", "run needs --config or --preset");
      const ScenarioConfig cfg = load(config_path, preset_name, overrides);
      if (pair) {
        for (const auto& r : run_ratio_pair(cfg)) report(r);
      } else {
        report(run_scenario(cfg));
      }
    } else if (*validate) {
      const ScenarioConfig cfg = parse_config(read_file(config_path));
      std::cout << render_config(cfg);
    } else if (*cross) {
      if (config_path.empty() && preset_name.empty()) throw ConfigError("", "crossmodel needs --config or --preset");
      const CrossModelResult r = run_crossmodel(load(config_path, preset_name, overrides));
      std::printf("eps %.4g: max |dP_down| effective %.4g, sideband model %.4g (budget %.4g), wall %.1f s\n", r.eps,
                  r.max_diff, r.max_diff_rwa, r.error_budget, r.wall_seconds);
    } else if (*show) {
      std::cout << render_config(preset(preset_name));
    } else if (*eta) {
      constexpr double kAmu = 1.66053906660e-27;
      const double k = kTwoPi / (wavelength_nm * 1e-9) * std::cos(angle_deg * kTwoPi / 360.0);
      std::printf("%.6g\n", lamb_dicke_parameter(k, mass_amu * kAmu, kTwoPi * nu_hz));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const MonitorError& e) {
    std::cerr << "monitor violation: " << e.what() << '\n';
    return kExitMonitor;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return 0;
}
