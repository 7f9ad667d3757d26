// model.hpp - Hamiltonians of the Raman-driven three-level ion
//
// All quantities use hbar = 1 and angular units (rad/s).

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "ionraman/operators.hpp"

namespace ionraman {

class ParameterError : public Error {
 public:
  using Error::Error;
};

/// How eps(x) is linearized in the Lamb-Dicke limit when the second-order
/// jump operators are formed: eps (1 + eta x) or eps (1 + i eta x), x = a + a^dag.
enum class LambDickeConvention { printed_real, imaginary_unit };

enum class Sideband { carrier, red, blue, full_exponential };

inline std::string_view to_string(Sideband sb) {
  switch (sb) {
    case Sideband::carrier: return "carrier";
    case Sideband::red: return "red";
    case Sideband::blue: return "blue";
    case Sideband::full_exponential: return "full_exponential";
  }
  return "?";
}

inline std::optional<Sideband> parse_sideband(std::string_view s) {
  if (s == "carrier") return Sideband::carrier;
  if (s == "red") return Sideband::red;
  if (s == "blue") return Sideband::blue;
  if (s == "full_exponential") return Sideband::full_exponential;
  return std::nullopt;
}

inline std::string_view to_string(LambDickeConvention c) {
  return c == LambDickeConvention::printed_real ? "real" : "imaginary";
}

/// Laser, trap and decay parameters.
struct PhysicalConfig {
  double nu = 0.0;       ///< trap frequency along X
  double delta_a = 0.0;  ///< detuning of beam a from |0> <-> |2>
  double delta_b = 0.0;  ///< detuning of beam b from |1> <-> |2>
  Complex g_a{};         ///< coupling of beam a, laser phase included
  Complex g_b{};
  double gamma_a = 0.0;  ///< decay rate |2> -> |0>
  double gamma_b = 0.0;  ///< decay rate |2> -> |1>
  double eta_a = 0.101;  ///< single-beam Lamb-Dicke parameters
  double eta_b = -0.101;
  int fock_dim = 15;
  LambDickeConvention lamb_dicke = LambDickeConvention::printed_real;

  Complex eps_a() const { return g_a / delta_a; }
  Complex eps_b() const { return g_b / delta_b; }

  /// Throws ParameterError naming the first violated invariant.
  void validate() const {
    auto fail = [](const std::string& msg) { throw ParameterError(msg); };
    for (double v : {nu, delta_a, delta_b, gamma_a, gamma_b, eta_a, eta_b, g_a.real(), g_a.imag(),
                     g_b.real(), g_b.imag()}) {
      if (!std::isfinite(v)) fail("physical parameters must be finite");
    }
    if (!(nu > 0.0)) fail("nu must be > 0");
    if (gamma_a < 0.0) fail("gamma_a must be >= 0");
    if (gamma_b < 0.0) fail("gamma_b must be >= 0");
    if (delta_a == 0.0) fail("delta_a must be nonzero");
    if (delta_b == 0.0) fail("delta_b must be nonzero");
    if (std::abs(eps_a()) >= 0.2) fail("|g_a / delta_a| must be < 0.2 (perturbative regime)");
    if (std::abs(eps_b()) >= 0.2) fail("|g_b / delta_b| must be < 0.2 (perturbative regime)");
    if (fock_dim < 2) fail("fock_dim must be >= 2");
  }
};

/// Parameters of the reduced two-level model.
struct EffectiveParams {
  double delta = 0.0;  ///< two-level detuning including Stark shifts
  double omega = 0.0;  ///< effective Rabi frequency, >= 0
  double phase = 0.0;  ///< phase of g_a g_b^* (1/delta_a + 1/delta_b)
  Complex eps_a{};
  Complex eps_b{};
  double eta = 0.0;  ///< eta_a - eta_b
};

inline EffectiveParams effective_params(const PhysicalConfig& cfg) {
  if (cfg.delta_a == 0.0 || cfg.delta_b == 0.0) {
    throw ParameterError("effective_params: zero detuning");
  }
  cfg.validate();
  EffectiveParams p;
  p.delta = cfg.delta_a - cfg.delta_b + std::norm(cfg.g_a) / cfg.delta_a -
            std::norm(cfg.g_b) / cfg.delta_b;
  // Complex coupling c multiplying -e^{i eta x} S_01; omega = 2|c|.
  const Complex c = 0.5 * (1.0 / cfg.delta_a + 1.0 / cfg.delta_b) * cfg.g_a * std::conj(cfg.g_b);
  p.omega = 2.0 * std::abs(c);
  p.phase = std::abs(c) > 0.0 ? std::arg(c) : 0.0;
  p.eps_a = cfg.eps_a();
  p.eps_b = cfg.eps_b();
  p.eta = cfg.eta_a - cfg.eta_b;
  return p;
}

/// Detuning delta that puts the given sideband on resonance; none for
/// full_exponential, which is not resonance-selected.
inline std::optional<double> sideband_detuning(Sideband sb, double nu) {
  switch (sb) {
    case Sideband::carrier: return 0.0;
    case Sideband::red: return nu;
    case Sideband::blue: return -nu;
    case Sideband::full_exponential: return std::nullopt;
  }
  return std::nullopt;
}

/// Solves delta(delta_b) = target for delta_b, keeping everything else fixed:
/// delta_b^2 - C delta_b + |g_b|^2 = 0 with C = delta_a + |g_a|^2/delta_a - target.
/// The root continuously connected to delta_b = C is returned.
inline double tune_delta_b(const PhysicalConfig& cfg, double target_delta) {
  if (cfg.delta_a == 0.0) throw ParameterError("tune_delta_b: zero delta_a");
  const double c = cfg.delta_a + std::norm(cfg.g_a) / cfg.delta_a - target_delta;
  const double disc = c * c - 4.0 * std::norm(cfg.g_b);
  if (disc < 0.0) throw ParameterError("tune_delta_b: no real detuning reaches the requested delta");
  return 0.5 * (c + std::copysign(std::sqrt(disc), c));
}

inline void check_sideband_tuning(const PhysicalConfig& cfg, Sideband sb) {
  const auto target = sideband_detuning(sb, cfg.nu);
  if (!target) return;
  const double delta = effective_params(cfg).delta;
  if (std::abs(delta - *target) > 1e-6 * cfg.nu) {
    throw ParameterError("sideband " + std::string(to_string(sb)) + " requires delta = " +
                         std::to_string(*target) + " rad/s, got " + std::to_string(delta));
  }
}

/// Frequency of the interaction-picture matrix element <1,n_to|H_int|0,n_from>
/// relative to H_0 = nu a^dag a + delta S^z. Zero means a stationary term.
inline double transition_frequency(double nu, double delta, int n_from, int n_to) {
  return static_cast<double>(n_to - n_from) * nu + delta;
}

/// eta_l = k_l sqrt(hbar / (2 M nu)), SI units in, dimensionless out.
inline double lamb_dicke_parameter(double wavenumber, double mass_kg, double nu) {
  constexpr double kHbar = 1.054571817e-34;
  if (!(mass_kg > 0.0) || !(nu > 0.0)) throw ParameterError("lamb_dicke_parameter: mass and nu must be > 0");
  return wavenumber * std::sqrt(kHbar / (2.0 * mass_kg * nu));
}

/// exp[i eta (a + a^dag)] on the phonon factor.
inline Operator displacement_phase(const SystemSpace& space, double eta) {
  const Operator a = boson_annihilate(space);
  return matrix_exp(kI * eta * (a + a.adjoint()));
}

namespace detail {

inline void require_levels(const PhysicalConfig& cfg, const SystemSpace& space, int levels,
                           const char* what) {
  if (space.level_count != levels) {
    throw DimensionError(std::string(what) + ": requires " + std::to_string(levels) + " internal levels");
  }
  if (space.fock_dim != cfg.fock_dim) {
    throw DimensionError(std::string(what) + ": space fock_dim " + std::to_string(space.fock_dim) +
                         " does not match config fock_dim " + std::to_string(cfg.fock_dim));
  }
}

}  // namespace detail

/// Rotating-frame three-level Hamiltonian
///   nu a^dag a - delta_a S_00 - delta_b S_11 + [g_a(x) S_02 + h.c.] + [g_b(x) S_12 + h.c.]
/// with g_l(x) = g_l exp[i eta_l (a + a^dag)].
inline Operator build_full_hamiltonian(const PhysicalConfig& cfg, const SystemSpace& space) {
  detail::require_levels(cfg, space, 3, "build_full_hamiltonian");
  const Operator num = number_operator(space);
  Operator h = embed_phonon(space, cfg.nu * num);
  h -= embed_internal(space, cfg.delta_a * atomic_op(space, 0, 0));
  h -= embed_internal(space, cfg.delta_b * atomic_op(space, 1, 1));
  const Operator va = tensor(atomic_op(space, 0, 2), cfg.g_a * displacement_phase(space, cfg.eta_a));
  const Operator vb = tensor(atomic_op(space, 1, 2), cfg.g_b * displacement_phase(space, cfg.eta_b));
  h += va + va.adjoint() + vb + vb.adjoint();
  return h;
}

/// Anti-Hermitian generator J of the nonlinear rotation T = exp(J):
///   [eps_a(x) S_02 - eps_a^*(x) S_20] + [eps_b(x) S_12 - eps_b^*(x) S_21].
inline Operator build_rotation_generator(const PhysicalConfig& cfg, const SystemSpace& space) {
  detail::require_levels(cfg, space, 3, "build_rotation_generator");
  const Operator ja = tensor(atomic_op(space, 0, 2), cfg.eps_a() * displacement_phase(space, cfg.eta_a));
  const Operator jb = tensor(atomic_op(space, 1, 2), cfg.eps_b() * displacement_phase(space, cfg.eta_b));
  return ja - ja.adjoint() + jb - jb.adjoint();
}

/// T H T^dag with T = exp(J), evaluated without truncating the commutator series.
inline Operator exact_transform(const Operator& h, const Operator& j) {
  require_same_dim(h, j, "exact_transform");
  if (max_norm(j) == 0.0) return h;
  const Operator t = matrix_exp(j);
  return t * h * t.adjoint();
}

/// Interaction Hamiltonian of the two-level effective model.
///   carrier:          -(Omega/2)(e^{i phi} S_01 + h.c.)
///   red:              -i eta (Omega/2)(e^{i phi} a S_01 - h.c.)
///   blue:             -i eta (Omega/2)(e^{i phi} a^dag S_01 - h.c.)
///   full_exponential: -(Omega/2)(e^{i phi} e^{i eta (a + a^dag)} S_01 + h.c.)
/// red/blue/carrier are interaction-picture, resonance-selected forms and
/// require delta tuned to +nu / -nu / 0.
inline Operator build_effective_hamiltonian(const PhysicalConfig& cfg, const SystemSpace& space,
                                            Sideband sb) {
  detail::require_levels(cfg, space, 2, "build_effective_hamiltonian");
  check_sideband_tuning(cfg, sb);
  const EffectiveParams p = effective_params(cfg);
  const Complex c = 0.5 * p.omega * std::exp(kI * p.phase);
  const Operator s01 = atomic_op(space, 0, 1);
  const Operator a = boson_annihilate(space);
  Operator up;  // the S_01 half; H = up + up^dag
  switch (sb) {
    case Sideband::carrier:
      up = tensor(-c * s01, Operator::Identity(space.fock_dim, space.fock_dim));
      break;
    case Sideband::red:
      up = tensor(-kI * p.eta * c * s01, a);
      break;
    case Sideband::blue:
      up = tensor(-kI * p.eta * c * s01, a.adjoint());
      break;
    case Sideband::full_exponential:
      up = tensor(-c * s01, displacement_phase(space, p.eta));
      break;
  }
  return up + up.adjoint();
}

/// Diagonal part of the transformed Hamiltonian restricted to levels {0, 1},
/// Stark shifts included:
///   nu a^dag a - (delta_a + |g_a|^2/delta_a) S_00 - (delta_b + |g_b|^2/delta_b) S_11.
/// Shares its energy zero with build_full_hamiltonian.
inline Operator build_effective_h0(const PhysicalConfig& cfg, const SystemSpace& space) {
  detail::require_levels(cfg, space, 2, "build_effective_h0");
  Operator h = embed_phonon(space, cfg.nu * number_operator(space));
  h -= embed_internal(space, (cfg.delta_a + std::norm(cfg.g_a) / cfg.delta_a) * atomic_op(space, 0, 0));
  h -= embed_internal(space, (cfg.delta_b + std::norm(cfg.g_b) / cfg.delta_b) * atomic_op(space, 1, 1));
  return h;
}

/// Residual of the reduction to levels {0, 1}:
///   || P01 T H T^dag P01 - (H_0 + H_eff) ||_max / || H_eff ||_max
/// with H_eff the untruncated-exponential effective Hamiltonian and H_0 its
/// Stark-shifted diagonal.
inline double effective_hamiltonian_error(const PhysicalConfig& cfg) {
  const SystemSpace s3(cfg.fock_dim, 3);
  const SystemSpace s2(cfg.fock_dim, 2);
  const Operator transformed = exact_transform(build_full_hamiltonian(cfg, s3), build_rotation_generator(cfg, s3));
  const Operator h_int = build_effective_hamiltonian(cfg, s2, Sideband::full_exponential);
  const double scale = max_norm(h_int);
  if (scale == 0.0) throw ParameterError("effective_hamiltonian_error: effective coupling vanishes");
  return max_norm(leading_block(transformed, s2.dim()) - build_effective_h0(cfg, s2) - h_int) / scale;
}

}  // namespace ionraman
