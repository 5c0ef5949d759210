// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
//
// modalsim decompose|run|verify|faithfulness. Exit status: 0 ok, 1 check
// failed, 2 unresolved minimization, 3 invalid input, 4 dt guard.

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "modalsim/modalsim.h"

namespace {

struct Flags {
  std::string scenario;
  std::string preset;
  std::uint64_t seed = 0;
  std::uint64_t n_traj = 0;
  double dt = 0.0;
  std::string out = "modalsim_out";
  std::string format = "csv";
  bool faulty_rate_rule = false;
};

using ContextPtr = std::unique_ptr<ms_context, decltype(&ms_context_destroy)>;
using ScenarioPtr = std::unique_ptr<ms_scenario, decltype(&ms_scenario_destroy)>;
using ReportPtr = std::unique_ptr<ms_report, decltype(&ms_report_destroy)>;

void add_run_flags(CLI::App* cmd, Flags& f, bool ensemble) {
  auto* scen = cmd->add_option("--scenario", f.scenario, "scenario file (JSON)");
  auto* preset = cmd->add_option("--preset", f.preset, "named scenario")->check(CLI::IsMember({"spin_fig1"}));
  scen->excludes(preset);
  cmd->add_option("--out", f.out, "output directory");
  if (!ensemble) return;
  cmd->add_option("--seed", f.seed, "64-bit seed")->check(CLI::PositiveNumber);
  cmd->add_option("--ntraj", f.n_traj, "number of trajectories")->check(CLI::PositiveNumber);
  cmd->add_option("--dt", f.dt, "time step")->check(CLI::PositiveNumber);
  cmd->add_option("--format", f.format, "occupation table format")->check(CLI::IsMember({"csv", "json"}));
}

int finish(ms_context* ctx, int status, ms_report* report, const std::string& out) {
  if (report != nullptr && ms_report_artifact_count(report) > 0) {
    if (ms_report_write(ctx, report, out.c_str()) != MS_OK) {
      std::fprintf(stderr, "modalsim: %s\n", ms_last_error(ctx));
      return MS_INVALID;
    }
    for (std::size_t i = 0; i < ms_report_artifact_count(report); ++i)
      std::printf("%s/%s\n", out.c_str(), ms_report_artifact_name(report, i));
  }
  if (status != MS_OK) std::fprintf(stderr, "modalsim: %s\n", ms_last_error(ctx));
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"modalsim: modal-interpretation property ascriptions and jump trajectories"};
  app.require_subcommand(1);
  Flags f;
  auto* decompose = app.add_subcommand("decompose", "preferred decompositions of the scenario's states");
  auto* run = app.add_subcommand("run", "jump-trajectory ensemble with occupation tables");
  auto* verify = app.add_subcommand("verify", "seeded property suites");
  auto* faith = app.add_subcommand("faithfulness", "faithfulness criterion on a measurement sequence");
  add_run_flags(decompose, f, false);
  add_run_flags(run, f, true);
  add_run_flags(faith, f, true);
  verify->add_option("--seed", f.seed, "64-bit seed")->check(CLI::PositiveNumber);
  verify->add_option("--out", f.out, "output directory");
  verify->add_flag("--inject-faulty-rates", f.faulty_rate_rule, "negative control for the rate balance suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : MS_INVALID;
  }

  ContextPtr ctx(ms_context_create(), &ms_context_destroy);
  if (!ctx) return MS_FAILED;
  ms_run_options opt;
  ms_run_options_init(&opt);
  opt.seed = f.seed;
  opt.n_traj = f.n_traj;
  opt.dt = f.dt;
  opt.format = f.format == "json" ? MS_FORMAT_JSON : MS_FORMAT_CSV;

  ms_report* raw = nullptr;
  if (verify->parsed()) {
    const int status = ms_verify(ctx.get(), f.seed == 0 ? 1 : f.seed, f.faulty_rate_rule ? 1 : 0, &opt, &raw);
    ReportPtr report(raw, &ms_report_destroy);
    return finish(ctx.get(), status, report.get(), f.out);
  }

  if (f.scenario.empty() && f.preset.empty()) {
    std::fprintf(stderr, "modalsim: give --scenario PATH or --preset NAME\n");
    return MS_INVALID;
  }
  ms_scenario* scen_raw = nullptr;
  const int loaded = f.preset.empty() ? ms_scenario_from_file(ctx.get(), f.scenario.c_str(), &scen_raw)
                                      : ms_scenario_preset(ctx.get(), f.preset.c_str(), &scen_raw);
  ScenarioPtr scenario(scen_raw, &ms_scenario_destroy);
  if (loaded != MS_OK) {
    std::fprintf(stderr, "modalsim: %s\n", ms_last_error(ctx.get()));
    return loaded;
  }

  int status = MS_INVALID;
  if (decompose->parsed()) {
    status = ms_decompose(ctx.get(), scenario.get(), &opt, &raw);
  } else if (run->parsed()) {
    status = ms_run(ctx.get(), scenario.get(), &opt, &raw);
  } else {
    status = ms_faithfulness(ctx.get(), scenario.get(), &opt, &raw);
  }
  ReportPtr report(raw, &ms_report_destroy);
  return finish(ctx.get(), status, report.get(), f.out);
}
