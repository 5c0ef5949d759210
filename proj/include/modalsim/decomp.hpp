// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Orthonormal decompositions of state vectors, IU entropy, bi-orthogonal and
// entropy-minimizing product decompositions, and majorization utilities.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "modalsim/linalg.hpp"

namespace modalsim {

/// Nonnegative weights summing to 1 within 1e-10.
class ProbabilityDistribution {
 public:
  explicit ProbabilityDistribution(std::vector<double> weights);
  /// Rescales nonnegative weights with a positive total.
  static ProbabilityDistribution normalized(std::vector<double> weights);

  const std::vector<double>& weights() const noexcept { return w_; }
  std::size_t size() const noexcept { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }

  /// Zero-padded to `n` entries.
  ProbabilityDistribution padded(std::size_t n) const;
  std::vector<double> sorted_descending() const;

 private:
  std::vector<double> w_;
};

/// -sum p log p in nats, 0 log 0 = 0.
double shannon_entropy(const ProbabilityDistribution& p);

/// sum f(p_k) for a user-supplied concave f.
using ConcaveFunction = std::function<double(double)>;
double concave_sum(const ProbabilityDistribution& p, const ConcaveFunction& f);

struct Term {
  Complex coefficient;
  StateVector vector;
};

/// Terms (c_k, phi_k) with orthonormal phi_k, |c_k| > 1e-10, and
/// sum c_k phi_k reconstructing the target within 1e-8.
class Decomposition {
 public:
  Decomposition(StateVector target, std::vector<Term> terms);
  static Decomposition trivial(const StateVector& psi);

  const StateVector& target() const noexcept { return target_; }
  const std::vector<Term>& terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  ProbabilityDistribution weights() const;
  CVector reconstruct() const;

 private:
  StateVector target_;
  std::vector<Term> terms_;
};

double iu_entropy(const Decomposition& d);

/// True iff every term vector is a product over `structure`'s factors.
bool is_product_decomposition(const Decomposition& d, const HilbertStructure& structure);

/// True iff, for every factor, the per-term factor vectors are pairwise
/// orthogonal (or the decomposition has a single term).
bool is_n_orthogonal(const Decomposition& d, const HilbertStructure& structure);

enum class Method { kTheorem4, kBruteForce };
enum class MinimizationStatus {
  kResolved,    // certified minimum via a bi-orthogonal product decomposition
  kHeuristic,   // best candidate from the multi-start search
  kUnresolved,  // no usable search; carries the best cheap candidate
};

std::string to_string(Method m);
std::string to_string(MinimizationStatus s);

struct DecompositionResult {
  Decomposition decomposition;
  double entropy = 0.0;
  Method method = Method::kTheorem4;
  bool unique = true;
  std::optional<std::string> degeneracy_note;
  MinimizationStatus status = MinimizationStatus::kResolved;
  std::optional<CoarseGraining> grain;
};

/// Schmidt decomposition across `grain`: coefficients are the nonzero
/// singular values, nonincreasing.
DecompositionResult bi_orthogonal_decomposition(const StateVector& psi, const CoarseGraining& grain);

struct SearchBudget {
  int restarts = 50;
  int max_evaluations = 20000;  // per restart
  std::uint64_t seed = 1;
  int threads = 1;
  int max_total_dim = 64;
  double penalty_weight = 1e3;
  double feasibility_tolerance = 1e-6;
};

/// Entropy-minimizing product decomposition. Tries every bipartite
/// coarse-graining for a bi-orthogonal decomposition that is also a product
/// decomposition; otherwise runs the multi-start search.
DecompositionResult preferred_decomposition(const StateVector& psi, const HilbertStructure& structure,
                                            const SearchBudget& budget = {});

/// Multi-start Nelder-Mead search over conditioned product bases. Every
/// candidate is a genuine orthonormal product decomposition, so the returned
/// entropy is an upper bound on the true minimum.
DecompositionResult brute_force_min_entropy(const StateVector& psi, const HilbertStructure& structure,
                                            const SearchBudget& budget);

// ---------------------------------------------------------------------------
// Majorization

/// Prefix sums of the sorted weights of p dominate those of q (shorter
/// vector zero-padded).
bool majorizes(const ProbabilityDistribution& p, const ProbabilityDistribution& q);
/// Prefix sums of p in its given order dominate those of sorted q.
bool check_prefix_dominance(const ProbabilityDistribution& p, const ProbabilityDistribution& q);
/// p_j = sum_k |U_jk|^2 p_k.
ProbabilityDistribution apply_doubly_stochastic(const ProbabilityDistribution& p, const CMatrix& u);

/// Gram-Schmidt construction of an A-orthogonal decomposition from a product
/// decomposition across `grain`: left factors are orthonormalized in order of
/// decreasing weight, dependent ones dropped.
Decomposition a_orthogonal_from_product(const Decomposition& d, const CoarseGraining& grain);

/// Sorts terms by nonincreasing |c|, ties by lexicographic amplitudes.
void canonical_order(std::vector<Term>& terms);

}  // namespace modalsim
