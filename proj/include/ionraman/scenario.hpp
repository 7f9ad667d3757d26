// scenario.hpp - configuration documents, presets and scenario runs

#pragma once

#include <chrono>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ionraman/fit.hpp"
#include "ionraman/integrator.hpp"
#include "ionraman/lindblad.hpp"
#include "ionraman/model.hpp"
#include "ionraman/observables.hpp"

namespace ionraman {

/// Invalid configuration document or value; key() names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& msg)
      : Error(key.empty() ? msg : "config key '" + key + "': " + msg), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Failure inside a run, with the scenario name prepended to the message.
class ScenarioError : public Error {
 public:
  enum class Kind { config, monitor, numerical, io };
  ScenarioError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

enum class ModelKind { effective, full };

inline std::string_view to_string(ModelKind m) { return m == ModelKind::full ? "full" : "effective"; }

struct InitialState {
  enum class Kind { fock, coherent };
  Kind kind = Kind::fock;
  double value = 0.0;  ///< n0 for fock, mean occupation for coherent

  friend bool operator==(const InitialState&, const InitialState&) = default;
};

/// Everything a run needs, in the units of the configuration document:
/// *_hz are ordinary frequencies, times are seconds.
struct ScenarioConfig {
  std::string preset;
  ModelKind model = ModelKind::effective;
  Sideband sideband = Sideband::blue;
  bool crossed_terms = true;
  double nu_hz = 0.0;
  double delta_a_hz = 0.0;
  std::optional<double> delta_b_hz;  ///< tuned onto the sideband when absent
  double g_a_hz = 0.0;
  double g_b_hz = 0.0;
  double gamma_sum_hz = 0.0;
  double gamma_ratio = 1.0;  ///< gamma_a / gamma_b
  double eta_a = 0.101;
  double eta_b = -0.101;
  std::optional<int> fock_dim;  ///< from the initial state when absent
  InitialState initial;
  int level = 0;
  double t_max_s = 0.0;
  std::optional<double> dt_s;  ///< (1/nu)/200 when absent
  int sample_stride = 1;
  std::string out;
  LambDickeConvention lamb_dicke = LambDickeConvention::printed_real;
  double min_eig_limit = -1e-6;  ///< abort threshold of the min-eigenvalue monitor

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;

  int resolved_fock_dim() const {
    if (fock_dim) return *fock_dim;
    const int base = default_fock_dim(initial.value);
    return initial.kind == InitialState::Kind::fock ? std::max(base, static_cast<int>(initial.value) + 2) : base;
  }
  double resolved_dt() const { return dt_s ? *dt_s : 1.0 / (200.0 * nu_hz); }

  /// Angular-unit physical parameters with delta_b tuned if unset.
  PhysicalConfig physical() const {
    PhysicalConfig p;
    p.nu = kTwoPi * nu_hz;
    p.delta_a = kTwoPi * delta_a_hz;
    p.g_a = kTwoPi * g_a_hz;
    p.g_b = kTwoPi * g_b_hz;
    const double sum = kTwoPi * gamma_sum_hz;
    p.gamma_a = sum * gamma_ratio / (1.0 + gamma_ratio);
    p.gamma_b = sum / (1.0 + gamma_ratio);
    p.eta_a = eta_a;
    p.eta_b = eta_b;
    p.fock_dim = resolved_fock_dim();
    p.lamb_dicke = lamb_dicke;
    if (delta_b_hz) {
      p.delta_b = kTwoPi * *delta_b_hz;
    } else {
      const auto target = sideband_detuning(sideband, p.nu);
      p.delta_b = tune_delta_b(p, target ? *target : 0.0);
    }
    return p;
  }

  IntegrationPlan plan() const {
    IntegrationPlan pl;
    pl.t_max = t_max_s;
    pl.dt = resolved_dt();
    pl.sample_stride = sample_stride;
    pl.monitors.min_eigenvalue_limit = min_eig_limit;
    return pl;
  }

  SystemSpace space() const {
    return SystemSpace(resolved_fock_dim(), model == ModelKind::full ? 3 : 2);
  }

  /// Builds the master equation selected by model/sideband/crossed_terms.
  /// The crossed terms belong to the effective model and are ignored for
  /// model = full.
  MasterEquation master_equation() const {
    const PhysicalConfig p = physical();
    if (model == ModelKind::full) return full_master_equation(p);
    return effective_master_equation(p, sideband, crossed_terms);
  }

  /// Throws ConfigError naming the first offending key. Includes the step
  /// guard, which needs the assembled generator.
  void validate() const;
};

namespace detail {

inline std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + v + "'");
  }
  if (pos != v.size() || !std::isfinite(d)) throw ConfigError(key, "expected a finite number, got '" + v + "'");
  return d;
}

inline int parse_int(const std::string& key, const std::string& v) {
  const double d = parse_double(key, v);
  if (d != std::floor(d) || std::abs(d) > 1e9) throw ConfigError(key, "expected an integer, got '" + v + "'");
  return static_cast<int>(d);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key, "expected on or off, got '" + v + "'");
}

inline InitialState parse_initial(const std::string& v) {
  const auto colon = v.find(':');
  if (colon == std::string::npos) throw ConfigError("initial", "expected fock:<n> or coherent:<nbar>, got '" + v + "'");
  const std::string kind = trim(v.substr(0, colon));
  const std::string arg = trim(v.substr(colon + 1));
  InitialState s;
  if (kind == "fock") {
    s.kind = InitialState::Kind::fock;
    s.value = parse_int("initial", arg);
    if (s.value < 0) throw ConfigError("initial", "Fock number must be >= 0");
  } else if (kind == "coherent") {
    s.kind = InitialState::Kind::coherent;
    s.value = parse_double("initial", arg);
    if (s.value < 0.0) throw ConfigError("initial", "mean occupation must be >= 0");
  } else {
    throw ConfigError("initial", "unknown state kind '" + kind + "'");
  }
  return s;
}

inline std::string render_initial(const InitialState& s) {
  return s.kind == InitialState::Kind::fock ? "fock:" + std::to_string(static_cast<int>(s.value))
                                            : "coherent:" + fmt(s.value, 17);
}

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "preset", "model",  "sideband", "crossed_terms", "nu_hz",   "delta_a_hz",    "delta_b_hz",
      "g_a_hz", "g_b_hz", "gamma_sum_hz", "gamma_ratio", "eta_a", "eta_b",         "fock_dim",
      "initial", "level", "t_max_s",  "dt_s",          "sample_stride", "out",   "lamb_dicke",
      "min_eig_limit"};
  return keys;
}

inline const std::vector<std::string>& required_keys() {
  static const std::vector<std::string> keys{"nu_hz",        "delta_a_hz", "g_a_hz", "g_b_hz",
                                             "gamma_sum_hz", "initial",    "t_max_s"};
  return keys;
}

inline void set_key(ScenarioConfig& cfg, const std::string& key, const std::string& v) {
  if (key == "model") {
    if (v == "effective") cfg.model = ModelKind::effective;
    else if (v == "full") cfg.model = ModelKind::full;
    else throw ConfigError(key, "expected effective or full, got '" + v + "'");
  } else if (key == "sideband") {
    const auto sb = parse_sideband(v);
    if (!sb) throw ConfigError(key, "expected carrier, red, blue or full_exponential, got '" + v + "'");
    cfg.sideband = *sb;
  } else if (key == "crossed_terms") {
    cfg.crossed_terms = parse_bool(key, v);
  } else if (key == "nu_hz") {
    cfg.nu_hz = parse_double(key, v);
  } else if (key == "delta_a_hz") {
    cfg.delta_a_hz = parse_double(key, v);
  } else if (key == "delta_b_hz") {
    if (v == "auto") cfg.delta_b_hz.reset();
    else cfg.delta_b_hz = parse_double(key, v);
  } else if (key == "g_a_hz") {
    cfg.g_a_hz = parse_double(key, v);
  } else if (key == "g_b_hz") {
    cfg.g_b_hz = parse_double(key, v);
  } else if (key == "gamma_sum_hz") {
    cfg.gamma_sum_hz = parse_double(key, v);
  } else if (key == "gamma_ratio") {
    cfg.gamma_ratio = parse_double(key, v);
  } else if (key == "eta_a") {
    cfg.eta_a = parse_double(key, v);
  } else if (key == "eta_b") {
    cfg.eta_b = parse_double(key, v);
  } else if (key == "fock_dim") {
    if (v == "auto") cfg.fock_dim.reset();
    else cfg.fock_dim = parse_int(key, v);
  } else if (key == "initial") {
    cfg.initial = parse_initial(v);
  } else if (key == "level") {
    cfg.level = parse_int(key, v);
  } else if (key == "t_max_s") {
    cfg.t_max_s = parse_double(key, v);
  } else if (key == "dt_s") {
    if (v == "auto") cfg.dt_s.reset();
    else cfg.dt_s = parse_double(key, v);
  } else if (key == "sample_stride") {
    cfg.sample_stride = parse_int(key, v);
  } else if (key == "out") {
    cfg.out = v;
  } else if (key == "lamb_dicke") {
    if (v == "real") cfg.lamb_dicke = LambDickeConvention::printed_real;
    else if (v == "imaginary") cfg.lamb_dicke = LambDickeConvention::imaginary_unit;
    else throw ConfigError(key, "expected real or imaginary, got '" + v + "'");
  } else if (key == "min_eig_limit") {
    cfg.min_eig_limit = parse_double(key, v);
  } else {
    throw ConfigError(key, "unknown key");
  }
}

}  // namespace detail

/// Names accepted by preset().
inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig2", "fig3", "fig4", "fig5", "crossmodel"};
  return names;
}

/// Built-in parameter sets. The experimental ones share nu/2pi = 11.2 MHz,
/// eta = 0.202, Omega/2pi = 475 kHz at eps = 0.01 and (gamma_a + gamma_b)/2pi
/// = 19.4 MHz split equally, driven on the blue sideband.
inline ScenarioConfig preset(const std::string& name) {
  ScenarioConfig c;
  c.preset = name;
  if (name == "crossmodel") {
    // Scaled parameters: delta_a = 50 g, red sideband, two effective Rabi
    // periods of the n0 = 1 oscillation.
    c.model = ModelKind::full;
    c.sideband = Sideband::red;
    c.crossed_terms = false;
    c.nu_hz = 1e6;
    c.g_a_hz = 1e6;
    c.g_b_hz = 1e6;
    c.delta_a_hz = 50e6;
    c.gamma_sum_hz = 0.0;
    c.eta_a = 0.2;
    c.eta_b = -0.2;
    c.fock_dim = 10;
    c.initial = {InitialState::Kind::fock, 1.0};
    const double omega_hz = 2.0 * c.g_a_hz * c.g_b_hz / c.delta_a_hz;
    c.t_max_s = 2.0 / ((c.eta_a - c.eta_b) * omega_hz);
    c.dt_s = 2.4e-10;
    c.sample_stride = 1000;
    c.out = "crossmodel.tsv";
    return c;
  }
  constexpr double kOmegaHz = 475e3;
  constexpr double kEps = 0.01;
  c.nu_hz = 11.2e6;
  c.delta_a_hz = kOmegaHz / (2.0 * kEps * kEps);
  c.g_a_hz = kEps * c.delta_a_hz;
  c.g_b_hz = c.g_a_hz;
  c.gamma_sum_hz = 19.4e6;
  c.gamma_ratio = 1.0;
  c.eta_a = 0.101;
  c.eta_b = -0.101;
  c.sample_stride = 100;
  if (name == "fig2") {
    c.initial = {InitialState::Kind::fock, 1.0};
    c.fock_dim = 15;
    c.t_max_s = 120e-6;
  } else if (name == "fig3") {
    c.initial = {InitialState::Kind::coherent, 3.0};
    c.fock_dim = 25;
    c.t_max_s = 120e-6;
  } else if (name == "fig4" || name == "fig5") {
    c.initial = {InitialState::Kind::coherent, 3.0};
    c.fock_dim = 25;
    c.t_max_s = 1.2e-3;
    c.dt_s = 1e-8;
  } else {
    std::string list;
    for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("preset", "unknown preset '" + name + "' (known: " + list + ")");
  }
  c.out = name + ".tsv";
  return c;
}

inline void ScenarioConfig::validate() const {
  if (!(nu_hz > 0.0)) throw ConfigError("nu_hz", "must be > 0");
  if (delta_a_hz == 0.0) throw ConfigError("delta_a_hz", "must be nonzero");
  if (delta_b_hz && *delta_b_hz == 0.0) throw ConfigError("delta_b_hz", "must be nonzero");
  if (g_a_hz < 0.0) throw ConfigError("g_a_hz", "must be >= 0");
  if (g_b_hz < 0.0) throw ConfigError("g_b_hz", "must be >= 0");
  if (gamma_sum_hz < 0.0) throw ConfigError("gamma_sum_hz", "must be >= 0");
  if (!(gamma_ratio > 0.0)) throw ConfigError("gamma_ratio", "must be > 0");
  if (fock_dim && *fock_dim < 2) throw ConfigError("fock_dim", "must be >= 2");
  if (level != 0 && level != 1) throw ConfigError("level", "must be 0 or 1");
  if (!(t_max_s > 0.0)) throw ConfigError("t_max_s", "must be > 0");
  if (dt_s && !(*dt_s > 0.0)) throw ConfigError("dt_s", "must be > 0");
  if (resolved_dt() > t_max_s) throw ConfigError("dt_s", "must not exceed t_max_s");
  if (sample_stride < 1) throw ConfigError("sample_stride", "must be >= 1");
  if (!(min_eig_limit <= 0.0)) throw ConfigError("min_eig_limit", "must be <= 0");
  const int n = resolved_fock_dim();
  if (initial.kind == InitialState::Kind::fock && initial.value >= n) {
    throw ConfigError("initial", "Fock number must be below fock_dim " + std::to_string(n));
  }
  if (initial.kind == InitialState::Kind::coherent) {
    const double a = std::sqrt(initial.value);
    if (a * a + 7.0 * a >= n) {
      throw ConfigError("fock_dim", std::to_string(n) + " truncates the coherent state; need > nbar + 7 sqrt(nbar)");
    }
  }
  if (model == ModelKind::effective && crossed_terms && sideband != Sideband::red && sideband != Sideband::blue) {
    throw ConfigError("crossed_terms", "crossed terms need sideband = red or blue");
  }
  PhysicalConfig p;
  try {
    p = physical();
  } catch (const ParameterError& e) {
    throw ConfigError("delta_b_hz", e.what());
  }
  if (std::abs(p.eps_a()) >= 0.2) throw ConfigError("g_a_hz", "|g_a / delta_a| must be < 0.2");
  if (std::abs(p.eps_b()) >= 0.2) throw ConfigError("g_b_hz", "|g_b / delta_b| must be < 0.2");
  if (model == ModelKind::effective) {
    try {
      check_sideband_tuning(p, sideband);
    } catch (const ParameterError& e) {
      throw ConfigError("delta_b_hz", e.what());
    }
  }
  try {
    plan().validate(master_equation().fastest_rate());
  } catch (const ParameterError& e) {
    throw ConfigError("dt_s", e.what());
  }
}

/// Parses the `key = value` document. A preset line is applied first, the
/// remaining keys override it. Without a preset every required key must be
/// present.
inline ScenarioConfig parse_config(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", "line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = detail::trim(body.substr(0, eq));
    const std::string value = detail::trim(body.substr(eq + 1));
    const auto& known = detail::known_keys();
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError(key, "unknown key");
    if (!seen.insert(key).second) throw ConfigError(key, "given more than once");
    if (value.empty()) throw ConfigError(key, "missing value");
    entries.emplace_back(key, value);
  }

  ScenarioConfig cfg;
  if (seen.count("preset")) {
    for (const auto& [k, v] : entries) {
      if (k == "preset") cfg = preset(v);
    }
  } else {
    std::string missing;
    for (const auto& k : detail::required_keys()) {
      if (!seen.count(k)) missing += (missing.empty() ? "" : ", ") + k;
    }
    if (!missing.empty()) throw ConfigError("", "missing required keys: " + missing + " (or give a preset)");
  }
  for (const auto& [k, v] : entries) {
    if (k != "preset") detail::set_key(cfg, k, v);
  }
  cfg.validate();
  return cfg;
}

/// Applies one `key=value` override to an already parsed config.
inline void apply_override(ScenarioConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("", "override '" + std::string(assignment) + "' lacks '='");
  const std::string key = detail::trim(assignment.substr(0, eq));
  const std::string value = detail::trim(assignment.substr(eq + 1));
  if (key == "preset") throw ConfigError(key, "cannot be overridden");
  detail::set_key(cfg, key, value);
}

/// Writes every field explicitly with 17 significant digits, so that
/// parse_config(render_config(c)) == c.
inline std::string render_config(const ScenarioConfig& c) {
  using detail::fmt;
  std::ostringstream os;
  if (!c.preset.empty()) os << "preset = " << c.preset << '\n';
  os << "model = " << to_string(c.model) << '\n';
  os << "sideband = " << to_string(c.sideband) << '\n';
  os << "crossed_terms = " << (c.crossed_terms ? "on" : "off") << '\n';
  os << "nu_hz = " << fmt(c.nu_hz, 17) << '\n';
  os << "delta_a_hz = " << fmt(c.delta_a_hz, 17) << '\n';
  os << "delta_b_hz = " << (c.delta_b_hz ? fmt(*c.delta_b_hz, 17) : "auto") << '\n';
  os << "g_a_hz = " << fmt(c.g_a_hz, 17) << '\n';
  os << "g_b_hz = " << fmt(c.g_b_hz, 17) << '\n';
  os << "gamma_sum_hz = " << fmt(c.gamma_sum_hz, 17) << '\n';
  os << "gamma_ratio = " << fmt(c.gamma_ratio, 17) << '\n';
  os << "eta_a = " << fmt(c.eta_a, 17) << '\n';
  os << "eta_b = " << fmt(c.eta_b, 17) << '\n';
  os << "fock_dim = " << (c.fock_dim ? std::to_string(*c.fock_dim) : "auto") << '\n';
  os << "initial = " << detail::render_initial(c.initial) << '\n';
  os << "level = " << c.level << '\n';
  os << "t_max_s = " << fmt(c.t_max_s, 17) << '\n';
  os << "dt_s = " << (c.dt_s ? fmt(*c.dt_s, 17) : "auto") << '\n';
  os << "sample_stride = " << c.sample_stride << '\n';
  if (!c.out.empty()) os << "out = " << c.out << '\n';
  os << "lamb_dicke = " << to_string(c.lamb_dicke) << '\n';
  os << "min_eig_limit = " << fmt(c.min_eig_limit, 17) << '\n';
  return os.str();
}

/// Initial density matrix on `space`.
inline Operator initial_density(const ScenarioConfig& cfg, const SystemSpace& space) {
  if (cfg.initial.kind == InitialState::Kind::fock) {
    return fock_state(space, static_cast<int>(cfg.initial.value), cfg.level);
  }
  return coherent_state(space, std::sqrt(cfg.initial.value), cfg.level);
}

struct ScenarioResult {
  ScenarioConfig config;
  Trajectory trajectory;
  std::optional<FitResult> fit;
  std::string fit_note;           ///< why no fit was made, if none
  double stationary_p_down = 0.0;  ///< mean over the last 10% of samples
  double wall_seconds = 0.0;
};

/// Mean of the last `fraction` of the values (at least one sample).
inline double tail_mean(const std::vector<double>& v, double fraction = 0.1) {
  if (v.empty()) return 0.0;
  const std::size_t count = std::max<std::size_t>(1, static_cast<std::size_t>(fraction * static_cast<double>(v.size())));
  double s = 0.0;
  for (std::size_t i = v.size() - count; i < v.size(); ++i) s += v[i];
  return s / static_cast<double>(count);
}

/// Tab-separated trajectory: t_s, p_down, coh_re, coh_im, coh_abs, n_mean,
/// trace, min_eig with 12 significant digits.
inline void write_trajectory(std::ostream& os, const Trajectory& traj) {
  using detail::fmt;
  os << "t_s\tp_down\tcoh_re\tcoh_im\tcoh_abs\tn_mean\ttrace\tmin_eig\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const Sample& s = traj.samples[i];
    os << fmt(traj.times[i], 12) << '\t' << fmt(s.p_down, 12) << '\t' << fmt(s.coherence.real(), 12) << '\t'
       << fmt(s.coherence.imag(), 12) << '\t' << fmt(std::abs(s.coherence), 12) << '\t' << fmt(s.n_mean, 12)
       << '\t' << fmt(s.trace, 12) << '\t' << fmt(s.min_eig, 12) << '\n';
  }
}

inline std::string summary_text(const ScenarioResult& r) {
  using detail::fmt;
  const ScenarioConfig& c = r.config;
  const PhysicalConfig p = c.physical();
  const EffectiveParams e = effective_params(p);
  std::ostringstream os;
  os << "preset = " << (c.preset.empty() ? "none" : c.preset) << '\n';
  os << "model = " << to_string(c.model) << '\n';
  os << "sideband = " << to_string(c.sideband) << '\n';
  os << "crossed_terms = " << (c.crossed_terms ? "on" : "off") << '\n';
  os << "gamma_ratio = " << fmt(c.gamma_ratio, 12) << '\n';
  os << "delta_b_hz = " << fmt(p.delta_b / kTwoPi, 12) << '\n';
  os << "eps_a = " << fmt(std::abs(e.eps_a), 12) << '\n';
  os << "eps_b = " << fmt(std::abs(e.eps_b), 12) << '\n';
  os << "omega_hz = " << fmt(e.omega / kTwoPi, 12) << '\n';
  os << "eta = " << fmt(e.eta, 12) << '\n';
  os << "samples = " << r.trajectory.times.size() << '\n';
  if (r.fit) {
    os << "fit_rabi_rad_s = " << fmt(r.fit->rabi, 12) << '\n';
    os << "fit_decay_per_s = " << fmt(r.fit->decay, 12) << '\n';
    os << "fit_residual_rms = " << fmt(r.fit->residual_rms, 12) << '\n';
    os << "fit_converged = " << (r.fit->converged ? "true" : "false") << '\n';
    os << "fit_iterations = " << r.fit->iterations << '\n';
  } else {
    os << "fit = none (" << r.fit_note << ")\n";
  }
  os << "p_down_stationary = " << fmt(r.stationary_p_down, 12) << '\n';
  os << "max_trace_drift = " << fmt(r.trajectory.monitors.max_trace_drift, 12) << '\n';
  os << "max_hermiticity_deviation = " << fmt(r.trajectory.monitors.max_herm_dev, 12) << '\n';
  os << "min_eigenvalue = " << fmt(r.trajectory.monitors.min_eigenvalue, 12) << '\n';
  os << "wall_seconds = " << fmt(r.wall_seconds, 6) << '\n';
  return os.str();
}

namespace detail {

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ScenarioError(ScenarioError::Kind::io, "cannot open '" + path + "' for writing");
  f << content;
  if (!f) throw ScenarioError(ScenarioError::Kind::io, "failed writing '" + path + "'");
}

inline std::string scenario_name(const ScenarioConfig& c) { return c.preset.empty() ? "custom" : c.preset; }

// Runs f, converting library errors into ScenarioError with context.
template <class F>
auto with_context(const ScenarioConfig& c, F&& f) {
  const std::string ctx = "scenario '" + scenario_name(c) + "': ";
  try {
    return f();
  } catch (const ScenarioError&) {
    throw;
  } catch (const MonitorError& e) {
    throw ScenarioError(ScenarioError::Kind::monitor, ctx + e.what());
  } catch (const ConfigError& e) {
    throw ScenarioError(ScenarioError::Kind::config, ctx + e.what());
  } catch (const ParameterError& e) {
    throw ScenarioError(ScenarioError::Kind::config, ctx + e.what());
  } catch (const Error& e) {
    throw ScenarioError(ScenarioError::Kind::numerical, ctx + e.what());
  }
}

}  // namespace detail

/// Integrates the configured model and, when cfg.out is set, writes the
/// trajectory to cfg.out and the summary to cfg.out + ".summary". Fock-state
/// runs are fitted with the damped cosine.
inline ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  return detail::with_context(cfg, [&] {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    ScenarioResult r;
    r.config = cfg;
    const SystemSpace space = cfg.space();
    const MasterEquation me = cfg.master_equation();
    r.trajectory = integrate(me, initial_density(cfg, space), cfg.plan(), space);
    r.trajectory.metadata["config"] = render_config(cfg);
    const std::vector<double> pd = r.trajectory.p_down();
    r.stationary_p_down = tail_mean(pd);
    if (cfg.initial.kind == InitialState::Kind::fock) {
      try {
        r.fit = fit_damped_cosine(r.trajectory);
      } catch (const FitError& e) {
        r.fit_note = e.what();
      }
    } else {
      r.fit_note = "coherent initial state";
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!cfg.out.empty()) {
      std::ostringstream os;
      write_trajectory(os, r.trajectory);
      detail::write_file(cfg.out, os.str());
      detail::write_file(cfg.out + ".summary", summary_text(r));
    }
    return r;
  });
}

/// Output path with a tag inserted before the extension: a/b.tsv -> a/b_tag.tsv.
inline std::string tagged_path(const std::string& path, const std::string& tag) {
  if (path.empty()) return path;
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + "_" + tag;
  return path.substr(0, dot) + "_" + tag + path.substr(dot);
}

/// Runs cfg once per gamma ratio, concurrently; outputs are tagged ratio<r>.
inline std::vector<ScenarioResult> run_ratio_pair(const ScenarioConfig& cfg, std::vector<double> ratios = {1.0, 3.0}) {
  std::vector<std::future<ScenarioResult>> jobs;
  for (double ratio : ratios) {
    ScenarioConfig c = cfg;
    c.gamma_ratio = ratio;
    c.out = tagged_path(cfg.out, "ratio" + detail::fmt(ratio, 6));
    jobs.push_back(std::async(std::launch::async, [c] { return run_scenario(c); }));
  }
  std::vector<ScenarioResult> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

struct CrossModelResult {
  ScenarioConfig config;
  double eps = 0.0;           ///< max(|eps_a|, |eps_b|)
  double max_diff = 0.0;      ///< full vs effective (untruncated exponential)
  double max_diff_rwa = 0.0;  ///< full vs the resonance-selected sideband model
  double error_budget = 0.0;  ///< the O(eps) estimate
  Trajectory full;
  Trajectory effective;
  Trajectory rwa;
  double wall_seconds = 0.0;
};

/// Integrates the three-level equation and the effective equation from the
/// same initial state on the same time grid and compares P_down. The
/// effective model keeps the Stark-shifted H_0 and the full exponential
/// e^{i eta x}, so it is compared in the same frame as the three-level model;
/// the sideband-selected model is reported alongside.
inline CrossModelResult run_crossmodel(const ScenarioConfig& cfg) {
  return detail::with_context(cfg, [&] {
    const auto start = std::chrono::steady_clock::now();
    ScenarioConfig full_cfg = cfg;
    full_cfg.model = ModelKind::full;
    full_cfg.validate();
    const PhysicalConfig p = full_cfg.physical();
    const double dt = full_cfg.resolved_dt();
    const double detuning = std::max(std::abs(p.delta_a), std::abs(p.delta_b));
    if (dt * detuning >= 0.1) {
      throw ConfigError("dt_s", "stiffness guard: dt * delta = " + detail::fmt(dt * detuning, 6) + " must be < 0.1");
    }
    CrossModelResult r;
    r.config = cfg;
    r.eps = std::max(std::abs(p.eps_a()), std::abs(p.eps_b()));
    r.error_budget = r.eps;

    // A whole number of sampling intervals, so that the two-level models can
    // take coarser steps and still land on the same grid.
    IntegrationPlan plan = full_cfg.plan();
    const double interval = plan.dt * plan.sample_stride;
    plan.t_max = std::ceil(plan.t_max / interval - 1e-9) * interval;
    auto coarse = [&](const MasterEquation& me) {
      IntegrationPlan pl = plan;
      for (int k = plan.sample_stride; k > 1; --k) {
        if (plan.sample_stride % k == 0 && k * plan.dt * me.fastest_rate() <= 0.02) {
          pl.dt = k * plan.dt;
          pl.sample_stride = plan.sample_stride / k;
          break;
        }
      }
      return pl;
    };
    const SystemSpace s3(p.fock_dim, 3);
    const SystemSpace s2(p.fock_dim, 2);
    ScenarioConfig eff_cfg = cfg;
    eff_cfg.model = ModelKind::effective;
    r.full = integrate(full_master_equation(p), initial_density(cfg, s3), plan, s3);
    const MasterEquation eff = effective_master_equation(p, Sideband::full_exponential, false);
    r.effective = integrate(eff, initial_density(cfg, s2), coarse(eff), s2);
    const bool crossed = cfg.crossed_terms && (cfg.sideband == Sideband::red || cfg.sideband == Sideband::blue);
    const MasterEquation rwa = effective_master_equation(p, cfg.sideband, crossed);
    r.rwa = integrate(rwa, initial_density(cfg, s2), coarse(rwa), s2);
    if (r.effective.samples.size() != r.full.samples.size() || r.rwa.samples.size() != r.full.samples.size()) {
      throw NumericalError("crossmodel: sampling grids of the compared models differ");
    }
    for (std::size_t i = 0; i < r.full.samples.size(); ++i) {
      const double pf = r.full.samples[i].p_down;
      r.max_diff = std::max(r.max_diff, std::abs(pf - r.effective.samples[i].p_down));
      r.max_diff_rwa = std::max(r.max_diff_rwa, std::abs(pf - r.rwa.samples[i].p_down));
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!cfg.out.empty()) {
      using detail::fmt;
      std::ostringstream os;
      os << "t_s\tp_down_full\tp_down_effective\tp_down_sideband\tdiff\n";
      for (std::size_t i = 0; i < r.full.times.size(); ++i) {
        const double pf = r.full.samples[i].p_down;
        const double pe = r.effective.samples[i].p_down;
        os << fmt(r.full.times[i], 12) << '\t' << fmt(pf, 12) << '\t' << fmt(pe, 12) << '\t'
           << fmt(r.rwa.samples[i].p_down, 12) << '\t' << fmt(pf - pe, 12) << '\n';
      }
      detail::write_file(cfg.out, os.str());
      std::ostringstream sm;
      sm << "eps = " << fmt(r.eps, 12) << '\n';
      sm << "max_abs_diff_p_down = " << fmt(r.max_diff, 12) << '\n';
      sm << "max_abs_diff_p_down_sideband = " << fmt(r.max_diff_rwa, 12) << '\n';
      sm << "error_budget = " << fmt(r.error_budget, 12) << '\n';
      sm << "t_window_s = " << fmt(plan.t_max, 12) << '\n';
      sm << "steps = " << plan.steps() << '\n';
      sm << "max_trace_drift_full = " << fmt(r.full.monitors.max_trace_drift, 12) << '\n';
      sm << "wall_seconds = " << fmt(r.wall_seconds, 6) << '\n';
      detail::write_file(cfg.out + ".summary", sm.str());
    }
    return r;
  });
}

}  // namespace ionraman
