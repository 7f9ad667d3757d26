// lindblad.hpp - right-hand sides of the three-level and effective master equations

#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include "ionraman/model.hpp"
#include "ionraman/operators.hpp"

namespace ionraman {

/// Jump operator C entering as rate * L[C], L[C] rho = 2 C rho C^dag - {C^dag C, rho}.
struct Channel {
  Operator op;
  double rate = 0.0;
};

/// Parameters of the crossed K terms of the effective master equation.
struct CrossedSpec {
  Complex eps_a{};
  Complex eps_b{};
  double eta_a = 0.0;
  double eta_b = 0.0;
  double eta = 0.0;  ///< eta_a - eta_b; the trace of K vanishes only under that identity
  double gamma_a = 0.0;
  double gamma_b = 0.0;
  Sideband sideband = Sideband::red;  ///< red or blue: which phonon operator is resonant
};

enum class ModelTag { full, effective };

/// L[C] rho = 2 C rho C^dag - C^dag C rho - rho C^dag C.
inline Operator lindblad_apply(const Operator& c, const Operator& rho) {
  require_same_dim(c, rho, "lindblad_apply");
  const Operator cdc = c.adjoint() * c;
  return 2.0 * c * rho * c.adjoint() - cdc * rho - rho * cdc;
}

/// One term coef * left * rho * right of a crossed superoperator; the full
/// superoperator is X + X^dag with X the sum of its terms.
struct SandwichTerm {
  Complex coef;
  Operator left;
  Operator right;
};

namespace detail {

inline SystemSpace two_level_space_for(const Operator& rho) {
  if (rho.rows() != rho.cols() || rho.rows() % 2 != 0 || rho.rows() < 4) {
    throw DimensionError("crossed terms need a square two-level operator (even dimension >= 4)");
  }
  return SystemSpace(static_cast<int>(rho.rows() / 2), 2);
}

}  // namespace detail

/// The two K expressions for the red sideband, written out term by term
/// (blue swaps a and a^dag):
///   K1 = i eps_a eps_b^* [2(eta_a S00 a rho S01 - eta_b S00 rho a S01)
///                          - eta (a S01 S00 rho + rho a S01 S00)] + h.c.
///   K2 = i eps_b eps_a^* [2(eta_b S11 a^dag rho S10 - eta_a S11 rho a^dag S10)
///                          + eta (a^dag S10 S11 rho + rho a^dag S10 S11)] + h.c.
/// Returned as (K1 terms, K2 terms), unscaled by the decay rates.
inline std::pair<std::vector<SandwichTerm>, std::vector<SandwichTerm>> crossed_terms(
    const CrossedSpec& spec, const SystemSpace& space) {
  if (space.level_count != 2) throw DimensionError("crossed terms live on the two-level space");
  if (spec.sideband != Sideband::red && spec.sideband != Sideband::blue) {
    throw ParameterError("crossed terms are defined for the red or blue sideband only");
  }
  const Operator id = Operator::Identity(space.dim(), space.dim());
  const Operator s00 = embed_internal(space, atomic_op(space, 0, 0));
  const Operator s01 = embed_internal(space, atomic_op(space, 0, 1));
  const Operator s10 = embed_internal(space, atomic_op(space, 1, 0));
  const Operator s11 = embed_internal(space, atomic_op(space, 1, 1));
  const Operator a = embed_phonon(space, boson_annihilate(space));
  const bool red = spec.sideband == Sideband::red;
  const Operator lower = red ? a : Operator(a.adjoint());  // pairs with S01
  const Operator raise = red ? Operator(a.adjoint()) : a;  // pairs with S10

  const Complex k1 = kI * spec.eps_a * std::conj(spec.eps_b);
  const Complex k2 = kI * spec.eps_b * std::conj(spec.eps_a);
  std::vector<SandwichTerm> first{
      {k1 * 2.0 * spec.eta_a, s00 * lower, s01},
      {-k1 * 2.0 * spec.eta_b, s00, lower * s01},
      {-k1 * spec.eta, lower * s01 * s00, id},
      {-k1 * spec.eta, id, lower * s01 * s00},
  };
  std::vector<SandwichTerm> second{
      {k2 * 2.0 * spec.eta_b, s11 * raise, s10},
      {-k2 * 2.0 * spec.eta_a, s11, raise * s10},
      {k2 * spec.eta, raise * s10 * s11, id},
      {k2 * spec.eta, id, raise * s10 * s11},
  };
  return {std::move(first), std::move(second)};
}

inline Operator apply_sandwich(const std::vector<SandwichTerm>& terms, const Operator& rho) {
  Operator x = Operator::Zero(rho.rows(), rho.cols());
  for (const auto& t : terms) x += t.coef * t.left * rho * t.right;
  return x + x.adjoint();
}

/// (K1 rho, K2 rho), without the gamma/2 prefactors.
inline std::pair<Operator, Operator> crossed_k(const CrossedSpec& spec, const Operator& rho) {
  const SystemSpace space = detail::two_level_space_for(rho);
  const auto [first, second] = crossed_terms(spec, space);
  return {apply_sandwich(first, rho), apply_sandwich(second, rho)};
}

/// (gamma_a/2) K1 rho + (gamma_b/2) K2 rho.
inline Operator crossed_apply(const CrossedSpec& spec, const Operator& rho) {
  const auto [k1, k2] = crossed_k(spec, rho);
  return 0.5 * spec.gamma_a * k1 + 0.5 * spec.gamma_b * k2;
}

/// Hamiltonian, jump channels and optional crossed terms of one master
/// equation, assembled once into a sparse Liouvillian acting on the
/// column-major vectorization of rho. A Hamiltonian with many nonzeros stays
/// out of the Liouvillian and is applied as two dense products. Immutable
/// after construction; rhs() may be called concurrently.
class MasterEquation {
 public:
  using Liouvillian = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

  MasterEquation(Operator hamiltonian, std::vector<Channel> channels,
                 std::optional<CrossedSpec> crossed, ModelTag tag)
      : hamiltonian_(std::move(hamiltonian)),
        channels_(std::move(channels)),
        crossed_(std::move(crossed)),
        tag_(tag) {
    const Eigen::Index n = hamiltonian_.rows();
    if (n == 0 || hamiltonian_.cols() != n) throw DimensionError("MasterEquation: Hamiltonian must be square");
    if (!hamiltonian_.allFinite()) throw ParameterError("MasterEquation: non-finite Hamiltonian");
    for (const auto& ch : channels_) {
      require_same_dim(hamiltonian_, ch.op, "MasterEquation channel");
      if (!(ch.rate >= 0.0) || !std::isfinite(ch.rate)) {
        throw ParameterError("MasterEquation: channel rates must be finite and >= 0");
      }
    }
    std::vector<SandwichTerm> sandwiches;
    if (crossed_) {
      if (crossed_->gamma_a < 0.0 || crossed_->gamma_b < 0.0) {
        throw ParameterError("MasterEquation: crossed-term rates must be >= 0");
      }
      const auto [first, second] = crossed_terms(*crossed_, detail::two_level_space_for(hamiltonian_));
      for (const auto& t : first) sandwiches.push_back({0.5 * crossed_->gamma_a * t.coef, t.left, t.right});
      for (const auto& t : second) sandwiches.push_back({0.5 * crossed_->gamma_b * t.coef, t.left, t.right});
    }
    assemble(sandwiches);
    fastest_rate_ = estimate_fastest_rate(sandwiches);
  }

  const Operator& hamiltonian() const { return hamiltonian_; }
  const std::vector<Channel>& channels() const { return channels_; }
  const std::optional<CrossedSpec>& crossed() const { return crossed_; }
  ModelTag tag() const { return tag_; }
  Eigen::Index dim() const { return hamiltonian_.rows(); }
  const Liouvillian& liouvillian() const { return liouvillian_; }

  /// Upper estimate of the fastest rate in the generator (rad/s): spectral
  /// width of H plus the dissipative and crossed-term operator norms.
  double fastest_rate() const { return fastest_rate_; }

  /// -i[H, rho] + sum_k rate_k L[C_k] rho + crossed terms.
  Operator rhs(const Operator& rho) const {
    Operator out(dim(), dim());
    rhs_into(rho, out);
    return out;
  }

  /// As rhs(), writing into preallocated storage of the right shape.
  void rhs_into(const Operator& rho, Operator& out) const {
    if (rho.rows() != dim() || rho.cols() != dim()) throw DimensionError("rhs: density matrix dimension mismatch");
    out.resize(dim(), dim());
    Eigen::Map<const StateVector> in(rho.data(), rho.size());
    Eigen::Map<StateVector> res(out.data(), out.size());
    res.noalias() = liouvillian_ * in;
    if (dense_hamiltonian_) {
      out.noalias() += (-kI) * hamiltonian_ * rho;
      out.noalias() += kI * rho * hamiltonian_;
    }
  }

  /// rhs_into for Hermitian rho: the commutator takes one product, since
  /// i rho H = (-i H rho)^dag. `work` is scratch space.
  void rhs_hermitian_into(const Operator& rho, Operator& out, Operator& work) const {
    if (!dense_hamiltonian_) {
      rhs_into(rho, out);
      return;
    }
    if (rho.rows() != dim() || rho.cols() != dim()) throw DimensionError("rhs: density matrix dimension mismatch");
    out.resize(dim(), dim());
    Eigen::Map<const StateVector> in(rho.data(), rho.size());
    Eigen::Map<StateVector> res(out.data(), out.size());
    res.noalias() = liouvillian_ * in;
    work.noalias() = (-kI) * hamiltonian_ * rho;
    out += work;
    out += work.adjoint();
  }

  bool dense_hamiltonian() const { return dense_hamiltonian_; }

 private:
  using Sparse = Eigen::SparseMatrix<Complex>;

  static Sparse sparse(const Operator& op) {
    Sparse s = op.sparseView();
    s.makeCompressed();
    return s;
  }

  // vec(A X B) = (B^T kron A) vec(X) for column-major vec.
  void assemble(const std::vector<SandwichTerm>& sandwiches) {
    const Eigen::Index n = dim();
    Sparse id(n, n);
    id.setIdentity();
    const Sparse h = sparse(hamiltonian_);
    dense_hamiltonian_ = static_cast<double>(h.nonZeros()) > 0.2 * static_cast<double>(hamiltonian_.size());
    Sparse l(n * n, n * n);
    if (!dense_hamiltonian_) {
      l += Sparse(Eigen::kroneckerProduct(id, h)) * (-kI);
      l += Sparse(Eigen::kroneckerProduct(Sparse(h.transpose()), id)) * kI;
    }
    for (const auto& ch : channels_) {
      if (ch.rate == 0.0) continue;
      const Sparse c = sparse(ch.op);
      const Sparse cdc = sparse(ch.op.adjoint() * ch.op);
      l += Sparse(Eigen::kroneckerProduct(Sparse(c.conjugate()), c)) * Complex(2.0 * ch.rate);
      l -= Sparse(Eigen::kroneckerProduct(id, cdc)) * Complex(ch.rate);
      l -= Sparse(Eigen::kroneckerProduct(Sparse(cdc.transpose()), id)) * Complex(ch.rate);
    }
    for (const auto& t : sandwiches) {
      if (t.coef == Complex(0.0)) continue;
      const Sparse left = sparse(t.left);
      const Sparse right = sparse(t.right);
      // coef L rho R plus its adjoint conj(coef) R^dag rho L^dag.
      l += Sparse(Eigen::kroneckerProduct(Sparse(right.transpose()), left)) * t.coef;
      l += Sparse(Eigen::kroneckerProduct(Sparse(left.conjugate()), Sparse(right.adjoint()))) * std::conj(t.coef);
    }
    l.prune(Complex(0.0));
    liouvillian_ = l;
    liouvillian_.makeCompressed();
  }

  static double spectral_norm(const Operator& op) {
    Eigen::JacobiSVD<Operator> svd(op);
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  }

  double estimate_fastest_rate(const std::vector<SandwichTerm>& sandwiches) const {
    Eigen::SelfAdjointEigenSolver<Operator> es(0.5 * (hamiltonian_ + hamiltonian_.adjoint()),
                                               Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    double rate = ev.maxCoeff() - ev.minCoeff();
    for (const auto& ch : channels_) {
      const double c = spectral_norm(ch.op);
      rate += 2.0 * ch.rate * c * c;
    }
    for (const auto& t : sandwiches) rate += 2.0 * std::abs(t.coef) * spectral_norm(t.left) * spectral_norm(t.right);
    return rate;
  }

  Operator hamiltonian_;
  std::vector<Channel> channels_;
  std::optional<CrossedSpec> crossed_;
  ModelTag tag_;
  Liouvillian liouvillian_;
  bool dense_hamiltonian_ = false;
  double fastest_rate_ = 0.0;
};

/// drho/dt for the given master equation. Both models are time independent,
/// so t only documents the call site.
inline Operator rhs(const MasterEquation& me, const Operator& rho, double /*t*/ = 0.0) {
  return me.rhs(rho);
}

/// Transformed jump operators for the {0, 1} manifold.
struct JumpTransform {
  std::vector<Channel> channels;  ///< the four channels of the effective equation, two-level space
  CrossedSpec crossed;
  Operator second_order_a;  ///< S_02 - eps_a^*(x) S_00 - eps_b^*(x) S_01, three-level space
  Operator second_order_b;  ///< S_12 - eps_b^*(x) S_11 - eps_a^*(x) S_10
  Operator exact_a;         ///< T S_02 T^dag
  Operator exact_b;         ///< T S_12 T^dag
};

/// Channels (S_00, gamma_a|eps_a|^2/2), (S_11, gamma_b|eps_b|^2/2),
/// (S_10, gamma_a|eps_b|^2/2), (S_01, gamma_b|eps_a|^2/2) on the two-level space.
inline std::vector<Channel> effective_channels(const PhysicalConfig& cfg) {
  const SystemSpace space(cfg.fock_dim, 2);
  const double ea2 = std::norm(cfg.eps_a());
  const double eb2 = std::norm(cfg.eps_b());
  auto op = [&](int i, int j) { return embed_internal(space, atomic_op(space, i, j)); };
  return {
      {op(0, 0), 0.5 * cfg.gamma_a * ea2},
      {op(1, 1), 0.5 * cfg.gamma_b * eb2},
      {op(1, 0), 0.5 * cfg.gamma_a * eb2},
      {op(0, 1), 0.5 * cfg.gamma_b * ea2},
  };
}

inline CrossedSpec effective_crossed_spec(const PhysicalConfig& cfg, Sideband sb) {
  return {cfg.eps_a(), cfg.eps_b(), cfg.eta_a, cfg.eta_b, cfg.eta_a - cfg.eta_b, cfg.gamma_a, cfg.gamma_b, sb};
}

/// eps_l(x) linearized in eta_l according to cfg.lamb_dicke, as a phonon operator.
inline Operator linearized_eps(const PhysicalConfig& cfg, const SystemSpace& space, Complex eps, double eta) {
  const Operator a = boson_annihilate(space);
  const Operator x = a + a.adjoint();
  const Complex coeff = cfg.lamb_dicke == LambDickeConvention::printed_real ? Complex(1.0) : kI;
  return eps * (Operator::Identity(space.fock_dim, space.fock_dim) + coeff * eta * x);
}

inline JumpTransform transform_jump_operators(const PhysicalConfig& cfg, const SystemSpace& space,
                                              Sideband sb = Sideband::red) {
  detail::require_levels(cfg, space, 3, "transform_jump_operators");
  JumpTransform out;
  out.channels = effective_channels(cfg);
  out.crossed = effective_crossed_spec(cfg, sb);

  const Operator eps_a_x = linearized_eps(cfg, space, cfg.eps_a(), cfg.eta_a);
  const Operator eps_b_x = linearized_eps(cfg, space, cfg.eps_b(), cfg.eta_b);
  const Operator id = Operator::Identity(space.fock_dim, space.fock_dim);
  out.second_order_a = tensor(atomic_op(space, 0, 2), id) - tensor(atomic_op(space, 0, 0), eps_a_x.adjoint()) -
                       tensor(atomic_op(space, 0, 1), eps_b_x.adjoint());
  out.second_order_b = tensor(atomic_op(space, 1, 2), id) - tensor(atomic_op(space, 1, 1), eps_b_x.adjoint()) -
                       tensor(atomic_op(space, 1, 0), eps_a_x.adjoint());

  const Operator t = matrix_exp(build_rotation_generator(cfg, space));
  out.exact_a = t * embed_internal(space, atomic_op(space, 0, 2)) * t.adjoint();
  out.exact_b = t * embed_internal(space, atomic_op(space, 1, 2)) * t.adjoint();
  return out;
}

/// Max-norm gap between the second-order and exact transformed operators,
/// acting on states without level-2 population (right projection onto {0, 1}).
inline double jump_transform_error(const JumpTransform& jt, const SystemSpace& space) {
  Operator p01 = Operator::Zero(space.dim(), space.dim());
  for (int k = 0; k < 2 * space.fock_dim; ++k) p01(k, k) = 1.0;
  return std::max(max_norm((jt.exact_a - jt.second_order_a) * p01),
                  max_norm((jt.exact_b - jt.second_order_b) * p01));
}

/// Three-level equation: H_full, channels (S_20, gamma_a/2), (S_21, gamma_b/2).
inline MasterEquation full_master_equation(const PhysicalConfig& cfg) {
  const SystemSpace space(cfg.fock_dim, 3);
  std::vector<Channel> channels{
      {embed_internal(space, atomic_op(space, 2, 0)), 0.5 * cfg.gamma_a},
      {embed_internal(space, atomic_op(space, 2, 1)), 0.5 * cfg.gamma_b},
  };
  return MasterEquation(build_full_hamiltonian(cfg, space), std::move(channels), std::nullopt, ModelTag::full);
}

/// Effective two-level equation. For red/blue/carrier the Hamiltonian is the
/// resonance-selected interaction-picture form; full_exponential keeps the
/// Stark-shifted H_0 and the untruncated exponential (no rotating-wave step).
inline MasterEquation effective_master_equation(const PhysicalConfig& cfg, Sideband sb, bool with_crossed) {
  const SystemSpace space(cfg.fock_dim, 2);
  Operator h = build_effective_hamiltonian(cfg, space, sb);
  if (sb == Sideband::full_exponential) h += build_effective_h0(cfg, space);
  std::optional<CrossedSpec> crossed;
  if (with_crossed) {
    if (sb != Sideband::red && sb != Sideband::blue) {
      throw ParameterError("crossed terms require the red or blue sideband");
    }
    crossed = effective_crossed_spec(cfg, sb);
  }
  return MasterEquation(std::move(h), effective_channels(cfg), std::move(crossed), ModelTag::effective);
}

}  // namespace ionraman
