// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Dense complex linear algebra over explicitly factorized Hilbert spaces.
//
// Amplitudes are stored in row-major tensor order: factor 0 is the most
// significant digit of the linear index.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modalsim/errors.hpp"

namespace modalsim {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

namespace tol {
inline constexpr double kConstruct = 1e-10;  // orthonormality when building
inline constexpr double kVerify = 1e-8;      // idempotence, ordering, residuals
}  // namespace tol

/// Ordered factor dimensions of a tensor-product space. Every factor has
/// dimension at least 2.
class HilbertStructure {
 public:
  explicit HilbertStructure(std::vector<int> factor_dims);
  static HilbertStructure single(int dim);

  const std::vector<int>& dims() const noexcept { return dims_; }
  int factor_count() const noexcept { return static_cast<int>(dims_.size()); }
  int dim(int factor) const { return dims_.at(static_cast<std::size_t>(factor)); }
  int total_dim() const noexcept { return total_; }

  /// Structure of the listed factors, in the listed order.
  HilbertStructure subset(std::span<const int> factors) const;
  HilbertStructure concat(const HilbertStructure& other) const;

  bool operator==(const HilbertStructure&) const = default;
  std::string to_string() const;

 private:
  std::vector<int> dims_;
  int total_ = 1;
};

class StateVector {
 public:
  StateVector(HilbertStructure structure, CVector amplitudes);

  const HilbertStructure& structure() const noexcept { return structure_; }
  const CVector& amplitudes() const noexcept { return amps_; }
  int dim() const noexcept { return static_cast<int>(amps_.size()); }

  double norm() const { return amps_.norm(); }
  bool is_normalized(double tolerance = tol::kConstruct) const;
  StateVector normalized() const;
  /// <this|other>
  Complex inner(const StateVector& other) const;

  static StateVector basis(const HilbertStructure& structure, int index);

 private:
  HilbertStructure structure_;
  CVector amps_;
};

class Operator {
 public:
  Operator(HilbertStructure structure, CMatrix entries);

  const HilbertStructure& structure() const noexcept { return structure_; }
  const CMatrix& entries() const noexcept { return m_; }
  int dim() const noexcept { return static_cast<int>(m_.rows()); }

  bool is_hermitian(double tolerance = tol::kConstruct) const;
  Complex trace() const { return m_.trace(); }

 private:
  HilbertStructure structure_;
  CMatrix m_;
};

/// Orthogonal projector stored through an orthonormal basis of its range.
class Projector {
 public:
  /// `basis` columns must be orthonormal within 1e-10.
  explicit Projector(CMatrix basis);

  static Projector zero(int dim);
  static Projector identity(int dim);
  static Projector ray(const CVector& v);
  /// Projector onto the column span of `vectors` (singular values > cutoff).
  static Projector span_of(const CMatrix& vectors, double cutoff = tol::kConstruct);
  /// Projector onto the eigenvectors of a Hermitian matrix whose eigenvalue
  /// exceeds `cutoff`.
  static Projector support(const CMatrix& hermitian, double cutoff = tol::kConstruct);

  const CMatrix& basis() const noexcept { return basis_; }
  int rank() const noexcept { return static_cast<int>(basis_.cols()); }
  int dim() const noexcept { return static_cast<int>(basis_.rows()); }
  CMatrix matrix() const;
  Projector complement() const;
  double expectation(const CVector& psi) const;

 private:
  CMatrix basis_;
};

enum class Block { kLeft, kRight };

/// Two-block partition of factor indices.
class CoarseGraining {
 public:
  CoarseGraining(std::vector<int> left, std::vector<int> right, int factor_count);

  const std::vector<int>& left() const noexcept { return left_; }
  const std::vector<int>& right() const noexcept { return right_; }
  const std::vector<int>& block(Block b) const { return b == Block::kLeft ? left_ : right_; }
  int factor_count() const noexcept { return n_; }
  std::string to_string() const;

  /// Every bipartition with factor 0 on the left, ordered by bitmask.
  static std::vector<CoarseGraining> all_bipartitions(int factor_count);

 private:
  std::vector<int> left_;
  std::vector<int> right_;
  int n_;
};

// ---------------------------------------------------------------------------
// Tensor structure

StateVector tensor_product(std::span<const StateVector> factors);
StateVector tensor_product(const HilbertStructure& structure, std::span<const StateVector> factors);
CVector kron(const CVector& a, const CVector& b);
CMatrix kron(const CMatrix& a, const CMatrix& b);

/// Reorders amplitudes so that new factor i is old factor `order[i]`.
CVector permute_factors(const CVector& amps, const HilbertStructure& structure,
                        std::span<const int> order);
CMatrix permute_factors(const CMatrix& op, const HilbertStructure& structure,
                        std::span<const int> order);

/// Amplitudes reshaped as a (dim left) x (dim right) matrix.
CMatrix bipartite_matrix(const StateVector& psi, const CoarseGraining& grain);
/// Inverse of bipartite_matrix on a product u (x) v.
CVector join_bipartite(const CVector& left, const CVector& right, const HilbertStructure& structure,
                       const CoarseGraining& grain);

Operator partial_trace(const StateVector& psi, const CoarseGraining& grain, Block keep);
Operator partial_trace(const Operator& op, const CoarseGraining& grain, Block keep);

/// `local` acts on `factors` (in that order); identity on the rest.
CMatrix embed_operator(const CMatrix& local, const HilbertStructure& full,
                       std::span<const int> factors);

/// Per-factor vectors when `psi` is a product state (every one-factor cut
/// has rank 1 within `tolerance`), otherwise nullopt.
std::optional<std::vector<CVector>> factorize_product(const StateVector& psi,
                                                      double tolerance = tol::kVerify);

// ---------------------------------------------------------------------------
// Factorizations

struct Svd {
  CMatrix u;   // m x k, orthonormal columns
  RVector s;   // k, nonincreasing, nonnegative
  CMatrix v;   // n x k, orthonormal columns; A = u diag(s) v^dagger
};

/// Thin SVD by one-sided Jacobi rotations; k = min(m, n).
Svd svd(const CMatrix& a);

struct Eigh {
  RVector values;   // ascending
  CMatrix vectors;  // columns
};
Eigh eigh(const CMatrix& hermitian);

/// Orthonormalizes in order. Throws DependentVectorError on the first input
/// whose residual norm falls below 1e-10 times its own norm.
std::vector<CVector> gram_schmidt(std::span<const CVector> vectors);

struct GramSchmidtResult {
  std::vector<CVector> basis;
  std::vector<std::size_t> kept;  // input index of each basis vector
};
/// Same procedure, skipping dependent inputs instead of failing.
GramSchmidtResult gram_schmidt_independent(std::span<const CVector> vectors);

/// Columns completing the orthonormal columns of `basis` to a basis of the
/// whole space, drawn deterministically from the computational basis.
/// A nonnegative `max_columns` stops after that many columns.
CMatrix orthonormal_completion(const CMatrix& basis, Eigen::Index max_columns = -1);

/// Multiplies `v` by a phase so its first nonzero component is real and
/// nonnegative. Returns the factor applied.
Complex apply_phase_convention(CVector& v);

bool is_unitary(const CMatrix& u, double tolerance = tol::kVerify);
bool is_hermitian(const CMatrix& m, double tolerance = tol::kConstruct);

// ---------------------------------------------------------------------------
// Projector lattice

bool projector_leq(const Projector& p, const Projector& q);
bool projector_orthogonal(const Projector& p, const Projector& q);
bool projector_equal(const Projector& p, const Projector& q);
Projector projector_intersection(const Projector& p, const Projector& q);
/// Closed span of the two ranges.
Projector projector_join(const Projector& p, const Projector& q);

}  // namespace modalsim
