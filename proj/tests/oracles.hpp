// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Independent reference computations shared by the unit and acceptance tests.
// Nothing here calls the library's SVD or decomposition routines.
#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "modalsim/decomp.hpp"
#include "modalsim/random.hpp"

namespace oracle {

using modalsim::CMatrix;
using modalsim::Complex;
using modalsim::CVector;

/// Entropy of the reduced state of factor 0 for a two-factor vector, from
/// Eigen's self-adjoint eigensolver applied to a nested-loop partial trace.
inline double schmidt_entropy(const CVector& psi, int dl, int dr) {
  CMatrix rho = CMatrix::Zero(dl, dl);
  for (int a = 0; a < dl; ++a)
    for (int b = 0; b < dl; ++b)
      for (int c = 0; c < dr; ++c) rho(a, b) += psi(a * dr + c) * std::conj(psi(b * dr + c));
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho);
  double h = 0.0;
  for (int i = 0; i < dl; ++i) {
    const double w = es.eigenvalues()(i);
    if (w > 1e-300) h -= w * std::log(w);
  }
  return h;
}

inline double entropy_of(const std::vector<double>& w) {
  double total = 0.0;
  for (double x : w) total += x;
  double h = 0.0;
  for (double x : w)
    if (x > 0.0) h -= (x / total) * std::log(x / total);
  return h;
}

/// exp(-iHt) from Eigen's self-adjoint eigensolver.
inline CMatrix expm_hermitian(const CMatrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  CVector ph(h.rows());
  for (Eigen::Index i = 0; i < h.rows(); ++i) ph(i) = std::polar(1.0, -es.eigenvalues()(i) * t);
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

/// |<b_k|psi>|^2 for the columns of b.
inline std::vector<double> born(const CMatrix& b, const CVector& psi) {
  std::vector<double> p;
  for (Eigen::Index k = 0; k < b.cols(); ++k) p.push_back(std::norm(b.col(k).dot(psi)));
  return p;
}

/// Number of standard deviations between a count and a binomial mean.
inline double sigmas(std::uint64_t count, std::size_t n, double p) {
  const double sd = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
  const double diff = std::abs(static_cast<double>(count) - static_cast<double>(n) * p);
  if (sd == 0.0) return diff == 0.0 ? 0.0 : 1e300;
  return diff / sd;
}

inline CVector kron2(const CVector& a, const CVector& b) {
  CVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    for (Eigen::Index j = 0; j < b.size(); ++j) out(i * b.size() + j) = a(i) * b(j);
  return out;
}

struct ProductFamily {
  CVector psi;
  std::vector<Complex> coefficients;
  std::vector<CVector> left;   // factor-0 parts
  std::vector<CVector> right;  // factor-1 parts
};

/// Random orthonormal product family on (dl, dr): a random basis {b_j} of
/// factor 1, and for each j an independent random basis of factor 0. The
/// factor-0 parts are generally not mutually orthogonal. `m` terms are kept
/// with random complex coefficients.
inline ProductFamily random_product_family(modalsim::Rng& rng, int dl, int dr, int m) {
  const CMatrix b = modalsim::random_unitary(rng, dr);
  std::vector<CVector> lefts;
  std::vector<CVector> rights;
  for (int j = 0; j < dr; ++j) {
    const CMatrix a = modalsim::random_unitary(rng, dl);
    for (int i = 0; i < dl; ++i) {
      lefts.push_back(a.col(i));
      rights.push_back(b.col(j));
    }
  }
  // pick m distinct members by a partial Fisher-Yates shuffle
  std::vector<int> idx(lefts.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  for (int i = 0; i < m; ++i) {
    const auto span = static_cast<std::uint64_t>(idx.size()) - static_cast<std::uint64_t>(i);
    const int k = i + static_cast<int>(rng.next_u64() % span);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(k)]);
  }
  ProductFamily f;
  f.psi = CVector::Zero(dl * dr);
  double norm2 = 0.0;
  for (int i = 0; i < m; ++i) {
    const Complex c(rng.normal(), rng.normal());
    f.coefficients.push_back(c);
    norm2 += std::norm(c);
  }
  for (int i = 0; i < m; ++i) {
    f.coefficients[static_cast<std::size_t>(i)] /= std::sqrt(norm2);
    const auto k = static_cast<std::size_t>(idx[static_cast<std::size_t>(i)]);
    f.left.push_back(lefts[k]);
    f.right.push_back(rights[k]);
    f.psi += f.coefficients[static_cast<std::size_t>(i)] * kron2(lefts[k], rights[k]);
  }
  return f;
}

/// Random decomposition with orthonormal factor-0 parts and arbitrary unit
/// factor-1 parts.
inline ProductFamily random_a_orthogonal_family(modalsim::Rng& rng, int dl, int dr, int m) {
  const CMatrix a = modalsim::random_unitary(rng, dl);
  ProductFamily f;
  f.psi = CVector::Zero(dl * dr);
  double norm2 = 0.0;
  for (int i = 0; i < m; ++i) {
    const Complex c(rng.normal(), rng.normal());
    f.coefficients.push_back(c);
    norm2 += std::norm(c);
  }
  for (int i = 0; i < m; ++i) {
    f.coefficients[static_cast<std::size_t>(i)] /= std::sqrt(norm2);
    f.left.push_back(a.col(i));
    f.right.push_back(modalsim::random_state(rng, dr));
    f.psi += f.coefficients[static_cast<std::size_t>(i)] * kron2(f.left.back(), f.right.back());
  }
  return f;
}

inline std::vector<double> weights(const ProductFamily& f) {
  std::vector<double> w;
  for (Complex c : f.coefficients) w.push_back(std::norm(c));
  return w;
}

inline modalsim::Decomposition to_decomposition(const ProductFamily& f, const modalsim::HilbertStructure& s) {
  std::vector<modalsim::Term> terms;
  for (std::size_t i = 0; i < f.coefficients.size(); ++i)
    terms.push_back(modalsim::Term{f.coefficients[i], modalsim::StateVector(s, kron2(f.left[i], f.right[i]))});
  return modalsim::Decomposition(modalsim::StateVector(s, f.psi), std::move(terms));
}

}  // namespace oracle
