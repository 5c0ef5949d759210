// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <set>

#include "doctest.h"
#include "modalsim/random.hpp"

using namespace modalsim;

TEST_CASE("philox4x32-10 known answers") {
  // Random123 kat_vectors
  const auto z = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(z[0] == 0x6627e8d5u);
  CHECK(z[1] == 0xe169c58du);
  CHECK(z[2] == 0xbc57ac4cu);
  CHECK(z[3] == 0x9b00dbd8u);
  const auto f = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  CHECK(f[0] == 0x408f276du);
  CHECK(f[1] == 0x41c83b0eu);
  CHECK(f[2] == 0xa20bc7c6u);
  CHECK(f[3] == 0x6d5451fdu);
  const auto p = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  CHECK(p[0] == 0xd16cfe09u);
  CHECK(p[1] == 0x94fdccebu);
  CHECK(p[2] == 0x5001e420u);
  CHECK(p[3] == 0x24126ea1u);
}

TEST_CASE("streams are reproducible and distinct") {
  Rng a(7, 3);
  Rng b(7, 3);
  Rng c(7, 4);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    seen.insert(x);
    seen.insert(c.next_u64());
  }
  CHECK(seen.size() == 200);
}

TEST_CASE("seek repositions the stream") {
  Rng a(1, 0);
  for (int i = 0; i < 10; ++i) a.next_u64();
  const auto x = a.next_u64();  // 11th output: block 5, slot 0
  Rng b(1, 0);
  b.seek(5);
  CHECK(b.next_u64() == x);
}

TEST_CASE("uniform moments") {
  Rng r(99, 0);
  const int n = 200000;
  double s = 0.0;
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    s += u;
    s2 += u * u;
  }
  const double mean = s / n;
  // sd of mean is sqrt(1/12/n) ~ 6.5e-4
  CHECK(std::abs(mean - 0.5) < 4 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(s2 / n - 1.0 / 3.0) < 0.005);
}

TEST_CASE("random unitary and distribution samplers") {
  Rng r(5, 0);
  for (int d = 1; d <= 6; ++d) CHECK(is_unitary(random_unitary(r, d), 1e-12));
  const auto p = random_distribution(r, 5);
  double t = 0.0;
  for (double x : p) {
    CHECK(x >= 0.0);
    t += x;
  }
  CHECK(std::abs(t - 1.0) < 1e-14);
  CHECK(is_hermitian(random_hermitian(r, 4)));
}
