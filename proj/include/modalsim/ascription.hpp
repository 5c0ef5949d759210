// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Property ascription from a preferred projector: which projectors and
// variables are determinate, their values, and the subsystem rule.
#pragma once

#include <cstdint>
#include <optional>

#include "modalsim/linalg.hpp"

namespace modalsim {

class PropertyAscription {
 public:
  PropertyAscription(Projector preferred, HilbertStructure ambient);
  /// Rank-1 ascription onto the ray of a property state vector.
  static PropertyAscription from_state(const StateVector& phi);

  const Projector& preferred() const noexcept { return preferred_; }
  const HilbertStructure& ambient() const noexcept { return ambient_; }

 private:
  Projector preferred_;
  HilbertStructure ambient_;
};

struct ValueReport {
  bool determinate = false;
  std::optional<double> value;  // present iff determinate
};

/// Determinate iff r >= P (value 1) or r orthogonal to P (value 0).
ValueReport projector_status(const Projector& r, const PropertyAscription& a);

/// Determinate iff V P = lambda P within 1e-8; value lambda = Tr(V P) / rank P.
ValueReport variable_status(const CMatrix& v, const PropertyAscription& a);

/// Smallest projector R on the kept block with R (x) I >= p_ab: the support
/// of the partial trace of p_ab.
Projector subsystem_preferred_projector(const Projector& p_ab, const HilbertStructure& structure,
                                        const CoarseGraining& grain, Block keep);

/// Preferred projectors intersect only in the null space.
bool mutually_exclusive(const PropertyAscription& a1, const PropertyAscription& a2);

/// Closed form: equal preferred projectors, or orthogonal rank-1 projectors
/// in a two-dimensional ambient space. `probe_count` sampled members of each
/// ontology are checked against the other; a disagreement with the closed
/// form raises an inconsistency error.
bool ontologies_identical(const PropertyAscription& a1, const PropertyAscription& a2, int probe_count = 32,
                          std::uint64_t seed = 1);

}  // namespace modalsim
