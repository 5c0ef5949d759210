// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
#include "modalsim/ascription.hpp"

#include "modalsim/random.hpp"

namespace modalsim {

PropertyAscription::PropertyAscription(Projector preferred, HilbertStructure ambient)
    : preferred_(std::move(preferred)), ambient_(std::move(ambient)) {
  require(preferred_.rank() >= 1, ErrorCode::kStructural, "ascription: preferred projector has rank 0");
  require(preferred_.dim() == ambient_.total_dim(), ErrorCode::kStructural,
          "ascription: projector dimension does not match " + ambient_.to_string());
}

PropertyAscription PropertyAscription::from_state(const StateVector& phi) {
  return PropertyAscription(Projector::ray(phi.amplitudes()), phi.structure());
}

ValueReport projector_status(const Projector& r, const PropertyAscription& a) {
  require(r.dim() == a.preferred().dim(), ErrorCode::kStructural, "projector_status: dimension mismatch");
  if (projector_leq(a.preferred(), r)) return {true, 1.0};
  if (projector_orthogonal(r, a.preferred())) return {true, 0.0};
  return {false, std::nullopt};
}

ValueReport variable_status(const CMatrix& v, const PropertyAscription& a) {
  const CMatrix& b = a.preferred().basis();
  require(v.rows() == b.rows() && v.cols() == b.rows(), ErrorCode::kStructural, "variable_status: dimension mismatch");
  require(is_hermitian(v), ErrorCode::kStructural, "variable_status: operator is not Hermitian");
  const CMatrix vb = v * b;
  const double lambda = (b.adjoint() * vb).trace().real() / static_cast<double>(b.cols());
  // ||(V - lambda) P||_F equals ||(V - lambda) B||_F for orthonormal B
  if ((vb - lambda * b).norm() < tol::kVerify) return {true, lambda};
  return {false, std::nullopt};
}

Projector subsystem_preferred_projector(const Projector& p_ab, const HilbertStructure& structure,
                                        const CoarseGraining& grain, Block keep) {
  require(p_ab.dim() == structure.total_dim(), ErrorCode::kStructural,
          "subsystem_preferred_projector: dimension mismatch");
  const Operator reduced = partial_trace(Operator(structure, p_ab.matrix()), grain, keep);
  return Projector::support(reduced.entries(), tol::kConstruct);
}

bool mutually_exclusive(const PropertyAscription& a1, const PropertyAscription& a2) {
  require(a1.ambient() == a2.ambient(), ErrorCode::kStructural, "mutually_exclusive: ambient mismatch");
  return projector_intersection(a1.preferred(), a2.preferred()).rank() == 0;
}

namespace {

// A member of Ont(P): either P joined with a random subspace of its
// complement, or a random subspace of the complement alone.
Projector sample_member(Rng& rng, const Projector& p) {
  const CMatrix comp = p.complement().basis();
  const int m = static_cast<int>(comp.cols());
  const bool above = (rng.next_u64() & 1u) == 0u;
  const int k = m == 0 ? 0 : static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(m + 1));
  const CMatrix sub = comp * random_unitary(rng, std::max(m, 1)).topLeftCorner(m, k);
  if (!above) return Projector::span_of(sub);
  CMatrix both(p.dim(), p.rank() + k);
  both << p.basis(), sub;
  return Projector::span_of(both);
}

bool member(const Projector& r, const Projector& p) { return projector_leq(p, r) || projector_orthogonal(r, p); }

}  // namespace

bool ontologies_identical(const PropertyAscription& a1, const PropertyAscription& a2, int probe_count,
                          std::uint64_t seed) {
  require(a1.ambient() == a2.ambient(), ErrorCode::kStructural, "ontologies_identical: ambient mismatch");
  const Projector& p = a1.preferred();
  const Projector& q = a2.preferred();
  const bool closed = projector_equal(p, q) ||
                      (p.dim() == 2 && p.rank() == 1 && q.rank() == 1 && projector_orthogonal(p, q));

  // the preferred projectors themselves are the first probes
  bool witness = !member(p, q) || !member(q, p);
  Rng rng(seed, 0);
  for (int i = 0; i < probe_count; ++i) {
    const Projector r1 = sample_member(rng, p);
    const Projector r2 = sample_member(rng, q);
    witness = witness || !member(r1, q) || !member(r2, p);
  }
  require(!(closed && witness), ErrorCode::kInconsistent,
          "ontologies_identical: probe separates ontologies the closed form declares equal");
  // with few probes a separating member can be missed by chance
  require(!(!closed && !witness && probe_count >= 16), ErrorCode::kInconsistent,
          "ontologies_identical: no probe separates ontologies the closed form declares distinct");
  return closed;
}

}  // namespace modalsim
