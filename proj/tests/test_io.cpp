// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "modalsim/errors.hpp"
#include "modalsim/io.hpp"
#include "modalsim/runner.hpp"

using namespace modalsim;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::string& text) {
  try {
    parse_scenario_text(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("scenario was accepted: " << text);
  return ErrorCode::kStructural;
}

const std::string kBell = R"({"kind":"state","dims":[2,2],"amplitudes":[0.7071067811865476,0,0,0.7071067811865476]})";

const std::string kSingle = R"({
  "kind": "single",
  "model": {
    "eigenvectors": [[1, 0], [0, 1]],
    "disturbed": [[1, 0], [0.7071067811865476, 0.7071067811865476]],
    "apparatus": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
    "environment": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
    "labels": ["up", "down"]
  },
  "coefficients": [0.6, [0, 0.8]],
  "timing": {"t_interaction": 1, "t_final": 2, "dt": 0.5},
  "n_traj": 3000,
  "seed": 11
})";

// sigma_x precession watched from the computational basis; minimal rates
// stay below the dt guard up to t = 1.2
const std::string kFixed = R"({
  "kind": "evolution", "dims": [2], "amplitudes": [1, 0],
  "hamiltonian": [[0, 1], [1, 0]], "paths": "fixed", "basis": [[1, 0], [0, 1]],
  "timing": {"t_final": 1.2, "dt": 0.005, "checkpoints": [0, 0.4, 0.8, 1.2]},
  "n_traj": 2000, "seed": 3
})";

const std::string kComoving = R"({
  "kind": "evolution", "dims": [3], "amplitudes": [0.6, [0, 0.8], 0],
  "hamiltonian": [[1, [0, 0.5], 0], [[0, -0.5], 0, 0.3], [0, 0.3, -1]],
  "paths": "comoving", "basis": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
  "timing": {"t_final": 2, "dt": 0.01, "checkpoints": [0, 1, 2]},
  "n_traj": 1000
})";

std::string artifact(const CommandResult& r, const std::string& name) {
  const Artifact* a = r.find(name);
  REQUIRE(a != nullptr);
  return a->content;
}

}  // namespace

TEST_CASE("complex values accept three spellings") {
  CHECK(complex_from_json(json(0.5)) == Complex(0.5, 0.0));
  CHECK(complex_from_json(json::array({0.5, -2})) == Complex(0.5, -2.0));
  CHECK(complex_from_json(json{{"re", 1}, {"im", 3}}) == Complex(1.0, 3.0));
  CHECK_THROWS_AS(complex_from_json(json("x")), Error);
  CHECK_THROWS_AS(complex_from_json(json::array({1, 2, 3})), Error);
}

TEST_CASE("scenario kinds parse") {
  const Scenario bell = parse_scenario_text(kBell);
  CHECK(bell.kind == ScenarioKind::kState);
  CHECK(bell.state->structure().dims() == std::vector<int>{2, 2});

  const Scenario single = parse_scenario_text(kSingle);
  CHECK(single.kind == ScenarioKind::kSingle);
  CHECK(single.model->outcome_labels == std::vector<std::string>{"up", "down"});
  CHECK(single.coefficients[1] == Complex(0.0, 0.8));
  CHECK(single.n_traj == 3000);
  CHECK(single.seed == 11);
  CHECK(single.timing.t_final == 2.0);

  const Scenario comoving = parse_scenario_text(kComoving);
  CHECK(comoving.kind == ScenarioKind::kEvolution);
  CHECK(comoving.paths == "comoving");
  CHECK(comoving.timing.checkpoints == std::vector<double>{0, 1, 2});

  const Scenario preset = parse_scenario_text(R"({"preset":"spin_fig1","adaptive":false,"coefficients":[0.8,0.6]})");
  CHECK(preset.kind == ScenarioKind::kSequence);
  CHECK_FALSE(preset.experiment->adaptive());
  CHECK(preset.experiment->coefficients[0] == Complex(0.8, 0.0));
  CHECK(preset_scenario("spin_fig1").experiment->adaptive());

  const Scenario normalized =
      parse_scenario_text(R"({"kind":"state","dims":[2],"amplitudes":[3,4],"normalize":true})");
  CHECK(normalized.state->amplitudes()(0).real() == doctest::Approx(0.6));
}

TEST_CASE("malformed scenarios are input errors") {
  for (const char* text : {
           "{",
           "[1, 2]",
           R"({"kind":"nope"})",
           R"({"kind":"state","amplitudes":[1,0]})",
           R"({"kind":"state","dims":[2,2],"amplitudes":[1,0,0]})",
           R"({"kind":"state","dims":[2],"amplitudes":[1,1]})",
           R"({"kind":"state","dims":[2],"amplitudes":[0,0],"normalize":true})",
           R"({"kind":"state","dims":[1],"amplitudes":[1]})",
           R"({"kind":"state","dims":[2],"amplitudes":[1,"x"]})",
           R"({"kind":"state","dims":[2],"amplitudes":[1,0],"timing":{"dt":-1}})",
           R"({"kind":"state","dims":[2],"amplitudes":[1,0],"timing":{"checkpoints":[1,0.5]}})",
           R"({"kind":"state","dims":[2],"amplitudes":[1,0],"n_traj":0})",
           R"({"kind":"evolution","dims":[2],"amplitudes":[1,0],"hamiltonian":[[0,1],[2,0]]})",
           R"({"kind":"evolution","dims":[2],"amplitudes":[1,0],"hamiltonian":[[0,1],[1,0]],"paths":"fixed",
               "basis":[[1,0],[1,0]]})",
           R"({"preset":"nope"})",
           R"({"preset":"spin_fig1","coefficients":[0.6,0.6]})",
           R"({"kind":"single","model":{"eigenvectors":[[1,0],[0,1]],"apparatus":[[1,0,0],[1,0,0],[0,0,1]],
               "environment":[[1,0,0],[0,1,0],[0,0,1]]},"coefficients":[1,0]})",
       }) {
    CAPTURE(text);
    CHECK(code_of(text) == ErrorCode::kInvalidInput);
  }
  CHECK_THROWS_AS(load_scenario_file("/nonexistent/scenario.json"), Error);
}

TEST_CASE("shortest decimal form round-trips") {
  Rng rng(61, 0);
  for (int i = 0; i < 1000; ++i) {
    const double x = (rng.uniform() - 0.5) * std::pow(10.0, static_cast<int>(rng.next_u64() % 20) - 10);
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("decomposition report round-trips") {
  const Scenario s = parse_scenario_text(kSingle);
  const StateVector psi = final_state_single(*s.model, s.coefficients);
  const DecompositionResult r = preferred_decomposition(psi, psi.structure());
  const json j = decomposition_json(r);
  const DecompositionResult back = decomposition_from_json(j, psi.structure());
  CHECK(decomposition_json(back) == j);
  CHECK(same_term_set(back.decomposition, r.decomposition, 0.0));
  CHECK(j.at("terms").size() == 2);
  CHECK(j.at("terms")[0].at("factors").size() == 3);
}

TEST_CASE("occupation tables round-trip in both formats") {
  for (const auto format : {OutputFormat::kCsv, OutputFormat::kJson}) {
    RunOverrides o;
    o.format = format;
    const CommandResult r = cmd_run(parse_scenario_text(kFixed), o);
    REQUIRE(r.status == kExitOk);
    const std::string summary = artifact(r, "summary.json");
    CHECK(json::parse(summary).dump(2) + "\n" == summary);
    if (format == OutputFormat::kCsv) {
      const std::string csv = artifact(r, "occupation.csv");
      const auto rows = parse_occupation_csv(csv);
      CHECK(rows.size() == 2000 * 4);
      CHECK(write_occupation_csv(rows) == csv);
      CHECK(csv.substr(0, csv.find('\n')) == "time,trajectory_id,path_index,p_1,p_2");
      CHECK(rows[1].time == 0.4);
      CHECK(rows[1].p[0] == doctest::Approx(std::cos(0.4) * std::cos(0.4)).epsilon(1e-9));
    } else {
      const std::string text = artifact(r, "occupation.json");
      const json j = json::parse(text);
      CHECK(j.dump(2) + "\n" == text);
      RunOverrides csv_o;
      const auto csv_rows = parse_occupation_csv(artifact(cmd_run(parse_scenario_text(kFixed), csv_o), "occupation.csv"));
      const auto rows = parse_occupation_json(j);
      REQUIRE(rows.size() == csv_rows.size());
      CHECK(write_occupation_csv(rows) == write_occupation_csv(csv_rows));
    }
  }
  CHECK_THROWS_AS(parse_occupation_csv("time,trajectory,path_index\n"), Error);
  CHECK_THROWS_AS(parse_occupation_csv("time,trajectory_id,path_index,p_1\n0,0,1\n"), Error);
  CHECK_THROWS_AS(parse_occupation_csv("time,trajectory_id,path_index,p_1\n0,x,1,1\n"), Error);
}

TEST_CASE("run summaries: marginals, zero jumps and pointer tables") {
  const json fixed = json::parse(artifact(cmd_run(parse_scenario_text(kFixed)), "summary.json"));
  for (const json& cp : fixed.at("checkpoints")) {
    const double t = cp.at("time").get<double>();
    CHECK(cp.at("targets")[0].get<double>() == doctest::Approx(std::cos(t) * std::cos(t)).epsilon(1e-9));
    CHECK(cp.at("z_scores")[0].get<double>() < 4.0);
  }
  CHECK(fixed.at("jumps").get<std::uint64_t>() > 0);

  const json comoving = json::parse(artifact(cmd_run(parse_scenario_text(kComoving)), "summary.json"));
  CHECK(comoving.at("jumps") == 0);

  const json single = json::parse(artifact(cmd_run(parse_scenario_text(kSingle)), "summary.json"));
  const json& ptr = single.at("pointer");
  CHECK(ptr.at("labels") == json::array({"up", "down"}));
  CHECK(ptr.at("unread") == 0);
  CHECK(ptr.at("z_scores")[0].get<double>() < 4.0);
  CHECK(ptr.at("targets")[0].get<double>() == doctest::Approx(0.36));
  CHECK_FALSE(single.contains("threads"));
}

TEST_CASE("run output does not depend on the worker count") {
  for (const std::string& text : {kSingle, kFixed, std::string(R"({"preset":"spin_fig1","n_traj":5000})")}) {
    RunOverrides one, many;
    one.threads = 1;
    many.threads = 4;
    const CommandResult a = cmd_run(parse_scenario_text(text), one);
    const CommandResult b = cmd_run(parse_scenario_text(text), many);
    REQUIRE(a.status == kExitOk);
    REQUIRE(a.artifacts.size() == b.artifacts.size());
    for (std::size_t i = 0; i < a.artifacts.size(); ++i) {
      CHECK(a.artifacts[i].name == b.artifacts[i].name);
      CHECK(a.artifacts[i].content == b.artifacts[i].content);
    }
  }
}

TEST_CASE("exit statuses") {
  const CommandResult bell = cmd_decompose(parse_scenario_text(kBell));
  CHECK(bell.status == kExitOk);
  const json jb = json::parse(artifact(bell, "decomposition.json"));
  CHECK(jb.at("results")[0].at("unique") == false);
  CHECK(jb.at("results")[0].at("entropy").get<double>() == doctest::Approx(std::log(2.0)));

  const CommandResult prod =
      cmd_decompose(parse_scenario_text(R"({"kind":"state","dims":[2,3],"amplitudes":[0,1,0,0,0,0]})"));
  const json jp = json::parse(artifact(prod, "decomposition.json"));
  CHECK(prod.status == kExitOk);
  CHECK(jp.at("results")[0].at("entropy") == 0.0);
  CHECK(jp.at("results")[0].at("method") == "theorem4");

  // W state: no bipartition is both Schmidt and product, and the search is
  // disabled by the dimension cap
  const double w = 1.0 / std::sqrt(3.0);
  json doc{{"kind", "state"}, {"dims", {2, 2, 2}}, {"amplitudes", {0, w, w, 0, w, 0, 0, 0}},
           {"budget", {{"max_total_dim", 4}}}};
  const CommandResult unresolved = cmd_decompose(parse_scenario(doc));
  CHECK(unresolved.status == kExitUnresolved);
  CHECK(json::parse(artifact(unresolved, "decomposition.json")).at("results")[0].at("status") == "unresolved");

  // sigma_x precession seen from a fixed basis: rates diverge near t = pi/2
  const CommandResult guard = cmd_run(parse_scenario_text(R"({
    "kind": "evolution", "dims": [2], "amplitudes": [1, 0],
    "hamiltonian": [[0, 1], [1, 0]], "paths": "fixed", "basis": [[1, 0], [0, 1]],
    "timing": {"t_final": 1.6, "dt": 0.05}, "n_traj": 200})"));
  CHECK(guard.status == kExitStepSize);
  CHECK(guard.message.find("use dt <=") != std::string::npos);
  CHECK(guard.artifacts.empty());

  RunOverrides off_grid;
  off_grid.dt = 0.3;
  CHECK(cmd_run(preset_scenario("spin_fig1"), off_grid).status == kExitInvalid);
  CHECK(cmd_faithfulness(parse_scenario_text(kBell)).status == kExitInvalid);
}

TEST_CASE("faithfulness report") {
  RunOverrides o;
  o.n_traj = 2000;
  const CommandResult r = cmd_faithfulness(preset_scenario("spin_fig1"), o);
  CHECK(r.status == kExitOk);
  const json j = json::parse(artifact(r, "faithfulness.json"));
  CHECK(j.at("all_faithful") == true);
  CHECK(j.at("unsatisfiable") == false);
  for (const json& b : j.at("branches")) {
    CHECK(b.at("fraction") == 1.0);
    CHECK(b.at("required_value").get<double>() == doctest::Approx(0.5));
  }
  CHECK(j.at("branches")[0].at("label") == "+z");
}
