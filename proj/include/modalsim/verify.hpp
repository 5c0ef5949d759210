// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Seeded property suites over every module. Each suite counts violations and
// keeps the first counterexample.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace modalsim {

struct PropertyResult {
  std::string name;
  std::string module;
  std::size_t cases = 0;
  std::size_t violations = 0;
  nlohmann::json counterexample;  // null when nothing failed
  bool passed() const { return cases > 0 && violations == 0; }
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  /// Replaces the user-supplied rate rule in the balance suite by one that
  /// ignores the current's sign; that suite must then fail.
  bool faulty_rate_rule = false;
  int threads = 1;
};

struct VerifyReport {
  std::vector<PropertyResult> properties;
  bool all_passed() const;
};

VerifyReport run_verification(const VerifyOptions& options = {});

nlohmann::json verify_json(const VerifyReport& report, const VerifyOptions& options);

}  // namespace modalsim
