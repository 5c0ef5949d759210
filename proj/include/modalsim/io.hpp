// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Scenario files and report serialization. JSON goes through nlohmann::json;
// CSV is written and read here.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "modalsim/decomp.hpp"
#include "modalsim/dynamics.hpp"
#include "modalsim/scenarios.hpp"

namespace modalsim {

enum class ScenarioKind { kState, kSingle, kSequence, kEvolution };
std::string to_string(ScenarioKind k);

struct Timing {
  double t_interaction = 1.0;  // single measurement
  double t_first = 1.0;        // sequences
  double t_between = 2.0;
  double t_second = 3.0;
  double t_final = 4.0;
  double dt = 0.5;
  std::vector<double> checkpoints;  // evolution runs; defaults to {0, t_final}
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::kState;
  std::string name;
  std::optional<StateVector> state;            // state, evolution
  std::optional<MeasurementModel> model;       // single
  std::vector<Complex> coefficients;           // single
  std::optional<AdaptiveExperiment> experiment;  // sequence
  std::optional<Operator> hamiltonian;         // evolution
  std::string paths = "preferred";             // evolution: preferred, fixed or comoving
  std::optional<CMatrix> basis;                // evolution with fixed or comoving paths
  Timing timing;
  std::size_t n_traj = 1000;
  std::uint64_t seed = 1;
  SearchBudget budget;
};

/// Parses a scenario document. Errors carry kInvalidInput.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario parse_scenario_text(const std::string& text);
Scenario load_scenario_file(const std::string& path);
/// Named presets: "spin_fig1" (adaptive) and "spin_sequence" (fixed S.x second stage).
Scenario preset_scenario(const std::string& name);

// ---------------------------------------------------------------------------
// Value encoding

/// Complex numbers as [re, im].
nlohmann::json complex_json(Complex z);
Complex complex_from_json(const nlohmann::json& j);
nlohmann::json vector_json(const CVector& v);
CVector vector_from_json(const nlohmann::json& j);
CMatrix matrix_from_json(const nlohmann::json& j);

nlohmann::json decomposition_json(const DecompositionResult& r);
/// Rebuilds a result from decomposition_json output.
DecompositionResult decomposition_from_json(const nlohmann::json& j, const HilbertStructure& structure);

/// Shortest round-trip decimal form.
std::string format_double(double x);

// ---------------------------------------------------------------------------
// Occupation tables: time, trajectory_id, path_index, p_1..p_d

struct OccupationRow {
  double time = 0.0;
  std::uint64_t trajectory = 0;
  int path = 0;  // one-based
  std::vector<double> p;
};

std::string occupation_csv(const Timeline& timeline, const EnsembleResult& ens);
std::vector<OccupationRow> parse_occupation_csv(const std::string& text);
std::string write_occupation_csv(const std::vector<OccupationRow>& rows);

nlohmann::json occupation_json(const Timeline& timeline, const EnsembleResult& ens);
std::vector<OccupationRow> parse_occupation_json(const nlohmann::json& j);

}  // namespace modalsim
