// observables.hpp - initial states and the observables read off density matrices

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ionraman/operators.hpp"

namespace ionraman {

inline Operator pure_density(const StateVector& psi) { return psi * psi.adjoint(); }

/// |level, n><level, n|.
inline Operator fock_state(const SystemSpace& space, int n, int level) {
  return pure_density(basis_state(space, level, n));
}

/// Truncated, renormalized coherent amplitudes on the phonon factor.
inline StateVector coherent_amplitudes(const SystemSpace& space, Complex alpha) {
  const double mod = std::abs(alpha);
  if (mod * mod + 7.0 * mod >= static_cast<double>(space.fock_dim)) {
    throw DimensionError("coherent_state: |alpha|^2 + 7|alpha| = " + std::to_string(mod * mod + 7.0 * mod) +
                         " must stay below fock_dim " + std::to_string(space.fock_dim));
  }
  StateVector c(space.fock_dim);
  c(0) = std::exp(-0.5 * mod * mod);
  for (int n = 1; n < space.fock_dim; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  return normalized(c);
}

/// Coherent motional state with the ion in `level`.
inline Operator coherent_state(const SystemSpace& space, Complex alpha, int level) {
  if (level < 0 || level >= space.level_count) throw DimensionError("coherent_state: level out of range");
  StateVector internal = StateVector::Zero(space.level_count);
  internal(level) = 1.0;
  const StateVector psi = Eigen::kroneckerProduct(internal, coherent_amplitudes(space, alpha)).eval();
  return pure_density(psi);
}

namespace detail {

inline void require_space(const Operator& rho, const SystemSpace& space, const char* what) {
  if (rho.rows() != space.dim() || rho.cols() != space.dim()) {
    throw DimensionError(std::string(what) + ": density matrix does not match the system space");
  }
}

inline double level_population(const Operator& rho, const SystemSpace& space, int level) {
  double p = 0.0;
  for (int n = 0; n < space.fock_dim; ++n) p += rho(space.index(level, n), space.index(level, n)).real();
  return p;
}

}  // namespace detail

/// Fluorescence probability sum_n <0,n|rho|0,n>.
inline double p_down(const Operator& rho, const SystemSpace& space) {
  detail::require_space(rho, space, "p_down");
  return detail::level_population(rho, space, 0);
}

inline double p_up(const Operator& rho, const SystemSpace& space) {
  detail::require_space(rho, space, "p_up");
  return detail::level_population(rho, space, 1);
}

/// Motional trace of the electronic coherence, sum_n <0,n|rho|1,n>.
inline Complex coherence_01(const Operator& rho, const SystemSpace& space) {
  detail::require_space(rho, space, "coherence_01");
  Complex c = 0.0;
  for (int n = 0; n < space.fock_dim; ++n) c += rho(space.index(0, n), space.index(1, n));
  return c;
}

inline Complex coherence_10(const Operator& rho, const SystemSpace& space) {
  detail::require_space(rho, space, "coherence_10");
  Complex c = 0.0;
  for (int n = 0; n < space.fock_dim; ++n) c += rho(space.index(1, n), space.index(0, n));
  return c;
}

inline double mean_phonon(const Operator& rho, const SystemSpace& space) {
  detail::require_space(rho, space, "mean_phonon");
  double m = 0.0;
  for (int l = 0; l < space.level_count; ++l) {
    for (int n = 0; n < space.fock_dim; ++n) m += n * rho(space.index(l, n), space.index(l, n)).real();
  }
  return m;
}

/// Reduced phonon-number distribution (levels traced out).
inline std::vector<double> phonon_distribution(const Operator& rho, const SystemSpace& space) {
  detail::require_space(rho, space, "phonon_distribution");
  std::vector<double> p(space.fock_dim, 0.0);
  for (int l = 0; l < space.level_count; ++l) {
    for (int n = 0; n < space.fock_dim; ++n) p[n] += rho(space.index(l, n), space.index(l, n)).real();
  }
  return p;
}

inline double purity(const Operator& rho) { return (rho * rho).trace().real(); }

inline double hermiticity_deviation(const Operator& rho) { return max_norm(rho - rho.adjoint()); }

/// Smallest eigenvalue of the Hermitian part.
inline double min_eigenvalue(const Operator& rho) {
  Eigen::SelfAdjointEigenSolver<Operator> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Throws unless rho is Hermitian and unit-trace within `tol`.
inline void check_density(const Operator& rho, double tol = 1e-10) {
  if (rho.rows() != rho.cols() || rho.rows() == 0) throw DimensionError("density matrix must be square");
  if (!rho.allFinite()) throw Error("density matrix has non-finite entries");
  const double herm = hermiticity_deviation(rho);
  if (herm > tol) throw Error("density matrix is not Hermitian (deviation " + std::to_string(herm) + ")");
  const double tr = rho.trace().real();
  if (std::abs(tr - 1.0) > tol) throw Error("density matrix trace " + std::to_string(tr) + " != 1");
}

}  // namespace ionraman
