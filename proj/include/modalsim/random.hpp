// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include "modalsim/linalg.hpp"

namespace modalsim {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3").
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based generator: stream (seed, stream_id) is a pure function of
/// its two keys, so trajectory i draws the same numbers on any thread.
class Rng {
 public:
  using result_type = std::uint64_t;

  Rng(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double normal();
  /// Repositions the stream at block `position` (each block yields two u64).
  void seek(std::uint64_t position);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buf_{};
  int avail_ = 0;
};

// Samplers used by the property suites and tests.
CVector random_state(Rng& rng, int dim);
CMatrix random_unitary(Rng& rng, int dim);
CMatrix random_hermitian(Rng& rng, int dim);
/// Projector onto a Haar-random subspace of the given rank.
Projector random_projector(Rng& rng, int dim, int rank);
/// Dirichlet(1,...,1) sample.
std::vector<double> random_distribution(Rng& rng, int size);

}  // namespace modalsim
