// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
//
// The four commands behind the C API and the command-line tool. Each returns
// an exit status and the files it would write.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "modalsim/io.hpp"
#include "modalsim/verify.hpp"

namespace modalsim {

enum ExitStatus : int {
  kExitOk = 0,
  kExitFailed = 1,      // verification or faithfulness criterion not met
  kExitUnresolved = 2,  // entropy minimization not settled
  kExitInvalid = 3,     // malformed input
  kExitStepSize = 4,    // dt guard
};

enum class OutputFormat { kCsv, kJson };

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_traj;
  std::optional<double> dt;
  OutputFormat format = OutputFormat::kCsv;
  int threads = 1;
};

struct Artifact {
  std::string name;
  std::string content;
};

struct CommandResult {
  int status = kExitOk;
  std::string message;
  std::vector<Artifact> artifacts;
  const Artifact* find(const std::string& name) const;
};

CommandResult cmd_decompose(const Scenario& scenario, const RunOverrides& overrides = {});
CommandResult cmd_run(const Scenario& scenario, const RunOverrides& overrides = {});
CommandResult cmd_verify(const VerifyOptions& options = {});
CommandResult cmd_faithfulness(const Scenario& scenario, const RunOverrides& overrides = {});

/// Exit status for an exception escaping a command.
CommandResult error_result(const std::exception& e);

/// Writes every artifact into `directory`, creating it if needed.
void write_artifacts(const CommandResult& result, const std::string& directory);

}  // namespace modalsim
