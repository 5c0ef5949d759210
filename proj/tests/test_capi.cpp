// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
//
// The shared C library and the command-line tool, used the way a caller
// would: only modalsim.h and the installed binary.
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "modalsim/modalsim.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("modalsim_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

int cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + MODALSIM_CLI + " " + args + " >/dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

struct Context {
  ms_context* ctx = ms_context_create();
  ~Context() { ms_context_destroy(ctx); }
};

}  // namespace

TEST_CASE("C API: preset run produces summary and occupation artifacts") {
  Context c;
  REQUIRE(c.ctx != nullptr);
  ms_scenario* s = nullptr;
  REQUIRE(ms_scenario_preset(c.ctx, "spin_fig1", &s) == MS_OK);
  ms_run_options opt;
  ms_run_options_init(&opt);
  opt.n_traj = 2000;
  opt.threads = 2;
  ms_report* r = nullptr;
  CHECK(ms_run(c.ctx, s, &opt, &r) == MS_OK);
  REQUIRE(r != nullptr);
  CHECK(ms_report_status(r) == MS_OK);
  REQUIRE(ms_report_artifact_count(r) == 2);
  CHECK(std::string(ms_report_artifact_name(r, 0)) == "summary.json");
  CHECK(std::string(ms_report_artifact_name(r, 1)) == "occupation.csv");
  std::size_t size = 0;
  const char* data = ms_report_artifact_data(r, 0, &size);
  const json summary = json::parse(std::string(data, size));
  CHECK(summary.at("n_traj") == 2000);
  CHECK(ms_report_artifact_name(r, 2) == nullptr);
  CHECK(ms_report_artifact_data(r, 7, &size) == nullptr);
  CHECK(size == 0);

  const fs::path dir = scratch("capi_write");
  CHECK(ms_report_write(c.ctx, r, dir.c_str()) == MS_OK);
  data = ms_report_artifact_data(r, 1, &size);
  CHECK(slurp(dir / "occupation.csv") == std::string(data, size));
  ms_report_destroy(r);
  ms_scenario_destroy(s);
}

TEST_CASE("C API: errors come back as status codes") {
  Context c;
  ms_scenario* s = nullptr;
  CHECK(ms_scenario_from_json(c.ctx, "{not json", &s) == MS_INVALID);
  CHECK(s == nullptr);
  CHECK(std::string(ms_last_error(c.ctx)).find("not valid JSON") != std::string::npos);
  CHECK(ms_scenario_preset(c.ctx, "nope", &s) == MS_INVALID);
  CHECK(ms_scenario_from_file(c.ctx, "/nonexistent.json", &s) == MS_INVALID);
  CHECK(ms_scenario_from_json(nullptr, "{}", &s) == MS_INVALID);
  ms_report* r = nullptr;
  CHECK(ms_run(c.ctx, nullptr, nullptr, &r) == MS_INVALID);
  CHECK(ms_report_status(nullptr) == MS_INVALID);
  CHECK(ms_report_artifact_count(nullptr) == 0);
  ms_report_destroy(nullptr);
  ms_scenario_destroy(nullptr);

  REQUIRE(ms_scenario_from_json(c.ctx,
                                R"({"kind":"evolution","dims":[2],"amplitudes":[1,0],"hamiltonian":[[0,1],[1,0]],
                                    "paths":"fixed","basis":[[1,0],[0,1]],"timing":{"t_final":1.6,"dt":0.05}})",
                                &s) == MS_OK);
  CHECK(ms_run(c.ctx, s, nullptr, &r) == MS_STEP_SIZE);
  REQUIRE(r != nullptr);
  CHECK(ms_report_artifact_count(r) == 0);
  CHECK(std::string(ms_report_message(r)).find("use dt <=") != std::string::npos);
  ms_report_destroy(r);
  ms_scenario_destroy(s);
}

TEST_CASE("C API: decompose, faithfulness and verify") {
  Context c;
  ms_scenario* s = nullptr;
  REQUIRE(ms_scenario_from_json(c.ctx, R"({"kind":"state","dims":[2,2],"amplitudes":[0,0,1,0]})", &s) == MS_OK);
  ms_report* r = nullptr;
  CHECK(ms_decompose(c.ctx, s, nullptr, &r) == MS_OK);
  std::size_t size = 0;
  const json d = json::parse(std::string(ms_report_artifact_data(r, 0, &size)));
  CHECK(d.at("results")[0].at("entropy") == 0.0);
  ms_report_destroy(r);
  ms_scenario_destroy(s);

  REQUIRE(ms_scenario_preset(c.ctx, "spin_fig1", &s) == MS_OK);
  ms_run_options opt;
  ms_run_options_init(&opt);
  opt.n_traj = 1000;
  CHECK(ms_faithfulness(c.ctx, s, &opt, &r) == MS_OK);
  CHECK(std::string(ms_report_artifact_name(r, 0)) == "faithfulness.json");
  ms_report_destroy(r);
  ms_scenario_destroy(s);

  CHECK(ms_verify(c.ctx, 3, 1, nullptr, &r) == MS_FAILED);
  CHECK(std::string(ms_last_error(c.ctx)) == "failed: rate_balance");
  const json v = json::parse(std::string(ms_report_artifact_data(r, 0, &size)));
  for (const json& p : v.at("properties")) {
    CAPTURE(p.at("name"));
    const bool balance = p.at("name") == "rate_balance";
    CHECK(p.at("passed") == !balance);
    if (balance) {
      CHECK(p.at("counterexample").at("rule") == "injected_faulty");
      CHECK(p.at("counterexample").contains("balance_gap"));
    }
  }
  ms_report_destroy(r);
}

TEST_CASE("CLI: exit statuses") {
  const fs::path dir = scratch("cli_status");
  write_file(dir / "product.json", R"({"kind":"state","dims":[2,2],"amplitudes":[1,0,0,0]})");
  write_file(dir / "bad.json", R"({"kind":"state","dims":[2,2],"amplitudes":[1,0]})");
  write_file(dir / "w.json", R"({"kind":"state","dims":[2,2,2],"normalize":true,"amplitudes":[0,1,1,0,1,0,0,0],
                                 "budget":{"max_total_dim":4}})");
  write_file(dir / "coarse.json", R"({"kind":"evolution","dims":[2],"amplitudes":[1,0],"hamiltonian":[[0,1],[1,0]],
                                      "paths":"fixed","basis":[[1,0],[0,1]],"timing":{"t_final":1.6,"dt":0.05}})");
  const std::string out = " --out " + (dir / "out").string();
  CHECK(cli("decompose --scenario " + (dir / "product.json").string() + out) == 0);
  const json d = json::parse(slurp(dir / "out" / "decomposition.json"));
  CHECK(d.at("results")[0].at("method") == "theorem4");
  CHECK(cli("decompose --scenario " + (dir / "bad.json").string() + out) == 3);
  CHECK(cli("decompose --scenario " + (dir / "missing.json").string() + out) == 3);
  CHECK(cli("decompose --scenario " + (dir / "w.json").string() + out) == 2);
  CHECK(cli("run --scenario " + (dir / "coarse.json").string() + out) == 4);
  CHECK(cli("run --preset spin_fig1 --ntraj 0" + out) == 3);
  CHECK(cli("run --preset nope" + out) == 3);
  CHECK(cli("run" + out) == 3);
  CHECK(cli("frobnicate") == 3);
  CHECK(cli("--help") == 0);
  CHECK(cli("faithfulness --preset spin_fig1 --ntraj 500" + out) == 0);
  CHECK(fs::exists(dir / "out" / "faithfulness.json"));
}

TEST_CASE("CLI: run bytes are identical across MODALSIM_THREADS") {
  const fs::path dir = scratch("cli_threads");
  for (const std::string format : {"csv", "json"}) {
    const std::string args = "run --preset spin_fig1 --seed 42 --ntraj 20000 --dt 0.5 --format " + format;
    REQUIRE(cli(args + " --out " + (dir / ("one_" + format)).string(), "MODALSIM_THREADS=1") == 0);
    REQUIRE(cli(args + " --out " + (dir / ("many_" + format)).string(), "MODALSIM_THREADS=8") == 0);
    for (const std::string& name : {std::string("summary.json"), "occupation." + format}) {
      const std::string a = slurp(dir / ("one_" + format) / name);
      CHECK(!a.empty());
      CHECK(a == slurp(dir / ("many_" + format) / name));
    }
  }
  // a different seed changes the ensemble
  REQUIRE(cli("run --preset spin_fig1 --seed 43 --ntraj 20000 --out " + (dir / "other").string()) == 0);
  CHECK(slurp(dir / "other" / "occupation.csv") != slurp(dir / "one_csv" / "occupation.csv"));
}

TEST_CASE("CLI: verify and its negative control") {
  const fs::path dir = scratch("cli_verify");
  CHECK(cli("verify --seed 5 --out " + (dir / "ok").string()) == 0);
  CHECK(json::parse(slurp(dir / "ok" / "verify.json")).at("all_passed") == true);
  CHECK(cli("verify --seed 5 --inject-faulty-rates --out " + (dir / "bad").string()) == 1);
  CHECK(json::parse(slurp(dir / "bad" / "verify.json")).at("all_passed") == false);
}
