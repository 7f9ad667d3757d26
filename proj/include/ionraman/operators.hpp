// operators.hpp - truncated Hilbert space and elementary operators
//
// Basis convention used throughout the library: the internal level index
// varies slowest and the phonon (Fock) index fastest, so the basis ket
// |level, n> sits at position level * fock_dim + n.

#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace ionraman {

using Complex = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Phonon truncation times internal-level count.
struct SystemSpace {
  int fock_dim = 15;
  int level_count = 3;

  SystemSpace() = default;
  SystemSpace(int fock, int levels) : fock_dim(fock), level_count(levels) {
    if (fock_dim < 2) {
      throw DimensionError("fock_dim must be >= 2, got " + std::to_string(fock_dim));
    }
    if (level_count != 2 && level_count != 3) {
      throw DimensionError("level_count must be 2 or 3, got " + std::to_string(level_count));
    }
  }

  int dim() const { return fock_dim * level_count; }
  int index(int level, int n) const { return level * fock_dim + n; }

  friend bool operator==(const SystemSpace&, const SystemSpace&) = default;
};

/// Fock truncation that keeps coherent-state tails of mean occupation nbar
/// below ~1e-10: ceil(nbar + 7 sqrt(nbar + 1)), never less than 15.
inline int default_fock_dim(double nbar) {
  const int n = static_cast<int>(std::ceil(nbar + 7.0 * std::sqrt(nbar + 1.0)));
  return n < 15 ? 15 : n;
}

inline double max_norm(const Operator& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Operator& a, double tol = 1e-12) {
  return a.rows() == a.cols() && max_norm(a - a.adjoint()) <= tol;
}

inline bool is_anti_hermitian(const Operator& a, double tol = 1e-12) {
  return a.rows() == a.cols() && max_norm(a + a.adjoint()) <= tol;
}

inline bool is_unitary(const Operator& a, double tol = 1e-10) {
  if (a.rows() != a.cols()) return false;
  return max_norm(a.adjoint() * a - Operator::Identity(a.rows(), a.cols())) <= tol;
}

inline Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }

inline void require_same_dim(const Operator& a, const Operator& b, const char* what) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.rows()) +
                         "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
  }
}

/// Truncated phonon lowering operator on the N-dimensional Fock factor:
/// entry (n, n+1) = sqrt(n+1).
inline Operator boson_annihilate(const SystemSpace& space) {
  const int n = space.fock_dim;
  Operator a = Operator::Zero(n, n);
  for (int k = 0; k + 1 < n; ++k) a(k, k + 1) = std::sqrt(static_cast<double>(k + 1));
  return a;
}

inline Operator boson_create(const SystemSpace& space) { return boson_annihilate(space).adjoint(); }

inline Operator number_operator(const SystemSpace& space) {
  Operator num = Operator::Zero(space.fock_dim, space.fock_dim);
  for (int k = 0; k < space.fock_dim; ++k) num(k, k) = static_cast<double>(k);
  return num;
}

/// Atomic transition operator S_ij = |j><i| on the internal factor.
inline Operator atomic_op(const SystemSpace& space, int i, int j) {
  if (i < 0 || j < 0 || i >= space.level_count || j >= space.level_count) {
    throw DimensionError("atomic_op: level index (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") out of range for " + std::to_string(space.level_count) + " levels");
  }
  Operator s = Operator::Zero(space.level_count, space.level_count);
  s(j, i) = 1.0;
  return s;
}

/// Kronecker product; with (internal, phonon) arguments this matches the
/// library basis ordering.
inline Operator tensor(const Operator& a, const Operator& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

/// Lifts an internal-factor operator to the full space (identity on phonons).
inline Operator embed_internal(const SystemSpace& space, const Operator& internal) {
  if (internal.rows() != space.level_count || internal.cols() != space.level_count) {
    throw DimensionError("embed_internal: operator is not level_count x level_count");
  }
  return tensor(internal, Operator::Identity(space.fock_dim, space.fock_dim));
}

/// Lifts a phonon-factor operator to the full space (identity on levels).
inline Operator embed_phonon(const SystemSpace& space, const Operator& phonon) {
  if (phonon.rows() != space.fock_dim || phonon.cols() != space.fock_dim) {
    throw DimensionError("embed_phonon: operator is not fock_dim x fock_dim");
  }
  return tensor(Operator::Identity(space.level_count, space.level_count), phonon);
}

/// Matrix exponential (scaling and squaring with Pade approximants).
inline Operator matrix_exp(const Operator& a) {
  if (a.rows() != a.cols()) throw DimensionError("matrix_exp: operator is not square");
  if (!a.allFinite()) throw Error("matrix_exp: non-finite entries in argument");
  Operator out = a.exp();
  if (!out.allFinite()) {
    throw Error("matrix_exp: result overflowed (argument max-norm " + std::to_string(max_norm(a)) + ")");
  }
  return out;
}

/// Keeps the leading `dim` x `dim` block. With the level-slowest ordering the
/// leading 2N block of a three-level operator is its restriction to levels {0, 1}.
inline Operator leading_block(const Operator& a, int dim) {
  if (dim < 0 || dim > a.rows() || dim > a.cols()) throw DimensionError("leading_block: block larger than operator");
  return a.topLeftCorner(dim, dim);
}

/// Normalized basis ket |level, n>.
inline StateVector basis_state(const SystemSpace& space, int level, int n) {
  if (level < 0 || level >= space.level_count || n < 0 || n >= space.fock_dim) {
    throw DimensionError("basis_state: |" + std::to_string(level) + ", " + std::to_string(n) +
                         "> outside the truncated space");
  }
  StateVector v = StateVector::Zero(space.dim());
  v(space.index(level, n)) = 1.0;
  return v;
}

/// Returns v / |v|; rejects the zero vector.
inline StateVector normalized(const StateVector& v) {
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw Error("normalized: vector has zero or non-finite norm");
  return v / norm;
}

}  // namespace ionraman
