// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "modalsim/ascription.hpp"
#include "modalsim/random.hpp"
#include "oracles.hpp"

using namespace modalsim;

namespace {
const double kR = 1.0 / std::sqrt(2.0);

CVector vec(std::initializer_list<Complex> xs) {
  CVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (Complex x : xs) v(i++) = x;
  return v;
}

const HilbertStructure kQubit = HilbertStructure::single(2);
PropertyAscription ray(const CVector& v) { return PropertyAscription(Projector::ray(v), HilbertStructure::single(static_cast<int>(v.size()))); }
CMatrix sz() {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = 0.5;
  m(1, 1) = -0.5;
  return m;
}
}  // namespace

TEST_CASE("projector status examples") {
  const auto up = ray(vec({1, 0}));
  const auto r1 = projector_status(Projector::identity(2), up);
  CHECK(r1.determinate);
  CHECK(*r1.value == 1.0);
  const auto r2 = projector_status(Projector::ray(vec({0, 1})), up);
  CHECK(r2.determinate);
  CHECK(*r2.value == 0.0);
  const auto r3 = projector_status(Projector::ray(vec({kR, kR})), up);
  CHECK_FALSE(r3.determinate);
  CHECK_FALSE(r3.value.has_value());
  CHECK(projector_status(Projector::zero(2), up).value == 0.0);
}

TEST_CASE("variable status examples") {
  const auto up = ray(vec({1, 0}));
  const auto v1 = variable_status(sz(), up);
  CHECK(v1.determinate);
  CHECK(*v1.value == doctest::Approx(0.5));
  CHECK_FALSE(variable_status(sz(), ray(vec({kR, kR}))).determinate);
  const auto id = variable_status(CMatrix::Identity(2, 2), ray(vec({0.6, Complex(0, 0.8)})));
  CHECK(id.determinate);
  CHECK(*id.value == doctest::Approx(1.0));
  CMatrix bad = CMatrix::Zero(2, 2);
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(variable_status(bad, up), Error);
}

TEST_CASE("subsystem preferred projector examples") {
  const HilbertStructure s({2, 2});
  const CoarseGraining g({0}, {1}, 2);
  const CVector a = vec({0.6, Complex(0, 0.8)});
  const CVector b = vec({kR, -kR});
  const Projector pa = subsystem_preferred_projector(Projector::ray(oracle::kron2(a, b)), s, g, Block::kLeft);
  CHECK(projector_equal(pa, Projector::ray(a)));

  const Projector pe = subsystem_preferred_projector(Projector::ray(vec({kR, 0, 0, kR})), s, g, Block::kLeft);
  CHECK(projector_equal(pe, Projector::identity(2)));

  // non-orthogonal A parts, orthogonal B parts
  const CVector a1 = vec({1, 0});
  const CVector a2 = vec({0.6, 0.8});
  const CVector b1 = vec({1, 0});
  const CVector b2 = vec({0, 1});
  const Projector p1 = Projector::ray(oracle::kron2(a1, b1));
  const Projector p2 = Projector::ray(oracle::kron2(a2, b2));
  CHECK(projector_equal(subsystem_preferred_projector(p1, s, g, Block::kLeft), Projector::ray(a1)));
  CHECK(projector_equal(subsystem_preferred_projector(p2, s, g, Block::kLeft), Projector::ray(a2)));
  CHECK(projector_equal(subsystem_preferred_projector(p2, s, g, Block::kRight), Projector::ray(b2)));
}

TEST_CASE("mutual exclusivity examples") {
  const auto up = ray(vec({1, 0}));
  CHECK(mutually_exclusive(up, ray(vec({0, 1}))));
  CHECK(mutually_exclusive(up, ray(vec({kR, kR}))));
  CHECK_FALSE(mutually_exclusive(up, up));
}

TEST_CASE("ontology identity examples") {
  const auto up = ray(vec({1, 0}));
  CHECK(ontologies_identical(up, ray(vec({0, 1}))));
  CHECK_FALSE(ontologies_identical(up, ray(vec({kR, kR}))));
  CHECK(ontologies_identical(up, up));
  CHECK_FALSE(ontologies_identical(ray(vec({1, 0, 0})), ray(vec({0, 1, 0}))));
}

TEST_CASE("determinate set is closed and respects the functional relations") {
  Rng rng(31, 0);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 2 + trial % 3;
    const Projector p = random_projector(rng, d, 1);
    const PropertyAscription a(p, HilbertStructure::single(d));
    // determinate members: P joined with subspaces of its complement, or
    // subspaces of the complement
    auto member = [&](int k, bool above) {
      const CMatrix comp = p.complement().basis();
      const CMatrix sub = comp * random_unitary(rng, d - 1).leftCols(k);
      if (!above) return Projector::span_of(sub);
      CMatrix both(d, 1 + k);
      both << p.basis(), sub;
      return Projector::span_of(both);
    };
    const int k1 = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(d));
    const int k2 = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(d));
    const Projector r1 = member(k1, trial % 2 == 0);
    const Projector r2 = member(k2, trial % 3 == 0);
    const auto v1 = projector_status(r1, a);
    const auto v2 = projector_status(r2, a);
    REQUIRE(v1.determinate);
    REQUIRE(v2.determinate);
    const auto vc = projector_status(r1.complement(), a);
    const auto vj = projector_status(projector_join(r1, r2), a);
    const auto vm = projector_status(projector_intersection(r1, r2), a);
    REQUIRE(vc.determinate);
    REQUIRE(vj.determinate);
    REQUIRE(vm.determinate);
    CHECK(*vc.value == 1.0 - *v1.value);
    CHECK(*vj.value == *v1.value + *v2.value - *v1.value * *v2.value);
    CHECK(*vm.value == *v1.value * *v2.value);
  }
}

TEST_CASE("value-1 contradiction for non-orthogonal preferred rays") {
  Rng rng(32, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + trial % 3;
    const CVector x = random_state(rng, d);
    const CVector y = random_state(rng, d);
    REQUIRE(std::abs(x.dot(y)) > 1e-6);
    const PropertyAscription a1 = ray(x);
    const PropertyAscription a2 = ray(y);
    CHECK_FALSE(ontologies_identical(a1, a2));
    CHECK(mutually_exclusive(a1, a2));
    // If one ontology held both P1 and P2 with value 1, the product rule
    // for intersections would give [P1 and P2] = 1, yet the intersection is
    // the null projector, whose value is 0 in every ascription.
    const double v1 = *projector_status(a1.preferred(), a1).value;
    const double v2 = *projector_status(a2.preferred(), a2).value;
    const Projector meet = projector_intersection(a1.preferred(), a2.preferred());
    CHECK(meet.rank() == 0);
    CHECK(v1 * v2 == 1.0);
    CHECK(*projector_status(meet, a1).value == 0.0);
    CHECK(*projector_status(meet, a2).value == 0.0);
    // and neither preferred ray is determinate in the other's ontology
    CHECK_FALSE(projector_status(a2.preferred(), a1).determinate);
  }
}

TEST_CASE("reductionist rule gives the smallest projector") {
  Rng rng(33, 0);
  const std::vector<std::pair<int, int>> shapes{{2, 2}, {2, 3}, {3, 2}, {3, 3}};
  for (int trial = 0; trial < 100; ++trial) {
    const auto [da, db] = shapes[static_cast<std::size_t>(trial) % shapes.size()];
    const HilbertStructure s({da, db});
    const CoarseGraining g({0}, {1}, 2);
    const int rank = 1 + static_cast<int>(rng.next_u64() % 2);
    const Projector pab = random_projector(rng, da * db, rank);
    const Projector pa = subsystem_preferred_projector(pab, s, g, Block::kLeft);
    auto lifted = [&](const Projector& r) {
      return Projector(kron(r.basis(), CMatrix(CMatrix::Identity(db, db))));
    };
    CHECK(projector_leq(pab, lifted(pa)));
    for (int probe = 0; probe < 6; ++probe) {
      const int k = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(da + 1));
      const Projector r = random_projector(rng, da, k);
      if (projector_leq(pab, lifted(r))) CHECK(projector_leq(pa, r));
    }
    // dropping any direction of P_A breaks the covering property
    if (pa.rank() > 0) {
      const Projector smaller(pa.basis().leftCols(pa.rank() - 1));
      CHECK_FALSE(projector_leq(pab, lifted(smaller)));
    }
    CHECK(projector_leq(pab, lifted(Projector::identity(da))));
  }
}

TEST_CASE("spectral constraint on variable status") {
  Rng rng(34, 0);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 3 + trial % 2;
    const CMatrix u = random_unitary(rng, d);
    // two spectral projectors: first column alone, the rest together
    const std::vector<double> vals{1.5, -0.7};
    const CMatrix v = vals[0] * u.leftCols(1) * u.leftCols(1).adjoint() +
                      vals[1] * u.rightCols(d - 1) * u.rightCols(d - 1).adjoint();
    const Projector p1(u.leftCols(1));
    const Projector p2(u.rightCols(d - 1));
    CVector phi;
    if (trial % 3 == 0) {
      phi = u.col(0);
    } else if (trial % 3 == 1) {
      phi = u.rightCols(d - 1) * random_state(rng, d - 1);
    } else {
      phi = random_state(rng, d);
    }
    const PropertyAscription a = ray(phi);
    const int containing = static_cast<int>(projector_leq(a.preferred(), p1)) +
                           static_cast<int>(projector_leq(a.preferred(), p2));
    const auto rep = variable_status(v, a);
    CHECK(rep.determinate == (containing == 1));
    if (rep.determinate) CHECK(*rep.value == doctest::Approx(trial % 3 == 0 ? vals[0] : vals[1]));
  }
}
