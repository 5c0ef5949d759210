// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace modalsim {

/// Error categories shared by the C++ core and the C API status codes.
enum class ErrorCode {
  kStructural,        // dimension mismatch, non-Hermitian input, non-unitary map
  kInvalidInput,      // malformed user data (files, amplitudes, configs)
  kUnresolved,        // entropy minimization could not be settled within budget
  kStepSize,          // trajectory step-size guard violated
  kInconsistent,      // model or rate data that contradicts its own invariants
  kDependentVector,   // Gram-Schmidt pivot below tolerance
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by gram_schmidt; `index` is the zero-based position of the
/// first input vector that lies in the span of its predecessors.
class DependentVectorError : public Error {
 public:
  explicit DependentVectorError(std::size_t index)
      : Error(ErrorCode::kDependentVector,
              "linearly dependent vector at index " + std::to_string(index)),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Raised by step_trajectory when sum_k T_kj dt exceeds the guard.
class StepSizeError : public Error {
 public:
  StepSizeError(double exit_probability, double suggested_dt)
      : Error(ErrorCode::kStepSize,
              "jump probability per step " + std::to_string(exit_probability) +
                  " exceeds 0.1; use dt <= " + std::to_string(suggested_dt)),
        exit_probability_(exit_probability),
        suggested_dt_(suggested_dt) {}
  double exit_probability() const noexcept { return exit_probability_; }
  double suggested_dt() const noexcept { return suggested_dt_; }

 private:
  double exit_probability_;
  double suggested_dt_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace modalsim
