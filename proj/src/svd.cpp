// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
//
// One-sided (Hestenes) Jacobi SVD for complex matrices. Column pairs are
// rotated until mutually orthogonal; the column norms are then the singular
// values and the accumulated rotations form V.
#include <algorithm>
#include <cmath>
#include <numeric>

#include "modalsim/linalg.hpp"

namespace modalsim {

namespace {

constexpr int kMaxSweeps = 80;
constexpr double kEps = 1e-15;

Svd jacobi_tall(const CMatrix& a) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  CMatrix w = a;
  CMatrix v = CMatrix::Identity(n, n);

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = w.col(p).squaredNorm();
        const double beta = w.col(q).squaredNorm();
        const Complex gamma = w.col(p).dot(w.col(q));
        const double g = std::abs(gamma);
        if (g <= kEps * std::sqrt(alpha * beta) || g == 0.0) continue;
        rotated = true;
        // rephase column q so the coupling is real, then a real rotation
        const Complex phase = std::conj(gamma) / g;
        w.col(q) *= phase;
        v.col(q) *= phase;
        const double zeta = (beta - alpha) / (2.0 * g);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        const CVector wp = w.col(p);
        w.col(p) = c * wp - s * w.col(q);
        w.col(q) = s * wp + c * w.col(q);
        const CVector vp = v.col(p);
        v.col(p) = c * vp - s * v.col(q);
        v.col(q) = s * vp + c * v.col(q);
      }
    }
    if (!rotated) break;
  }

  RVector sv(n);
  for (Eigen::Index j = 0; j < n; ++j) sv(j) = w.col(j).norm();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index x, Eigen::Index y) { return sv(x) > sv(y); });

  Svd out{CMatrix::Zero(m, n), RVector(n), CMatrix(n, n)};
  const double scale = n > 0 ? sv(idx[0]) : 0.0;
  std::vector<CVector> us;
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index j = idx[static_cast<std::size_t>(k)];
    out.s(k) = sv(j);
    out.v.col(k) = v.col(j);
    if (sv(j) > 1e-14 * std::max(scale, 1e-300) && sv(j) > 0.0) {
      out.u.col(k) = w.col(j) / sv(j);
      ++rank;
    }
  }
  // complete left vectors for (numerically) zero singular values
  if (rank < n) {
    const CMatrix comp = orthonormal_completion(out.u.leftCols(rank), n - rank);
    for (Eigen::Index k = rank; k < n; ++k) out.u.col(k) = comp.col(k - rank);
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    CVector u = out.u.col(k);
    const Complex f = apply_phase_convention(u);
    out.u.col(k) = u;
    out.v.col(k) *= f;
  }
  return out;
}

}  // namespace

Svd svd(const CMatrix& a) {
  require(a.allFinite(), ErrorCode::kInvalidInput, "svd: non-finite entries");
  if (a.rows() >= a.cols()) return jacobi_tall(a);
  // A^dagger = U' S V'^dagger  =>  A = V' S U'^dagger
  Svd t = jacobi_tall(a.adjoint());
  Svd out{std::move(t.v), std::move(t.s), std::move(t.u)};
  for (Eigen::Index k = 0; k < out.u.cols(); ++k) {
    CVector u = out.u.col(k);
    const Complex f = apply_phase_convention(u);
    out.u.col(k) = u;
    out.v.col(k) *= f;
  }
  return out;
}

}  // namespace modalsim
