// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "modalsim/modalsim.h"

#include <new>
#include <string>

#include "modalsim/errors.hpp"
#include "modalsim/runner.hpp"

struct ms_context {
  std::string last_error;
};

struct ms_scenario {
  modalsim::Scenario scenario;
};

struct ms_report {
  modalsim::CommandResult result;
};

namespace {

int fail_with(ms_context* ctx, int status, const std::string& message) {
  if (ctx != nullptr) ctx->last_error = message;
  return status;
}

template <typename F>
int load(ms_context* ctx, ms_scenario** out, F&& make) {
  if (ctx == nullptr || out == nullptr) return MS_INVALID;
  *out = nullptr;
  try {
    *out = new ms_scenario{make()};
    ctx->last_error.clear();
    return MS_OK;
  } catch (const std::bad_alloc&) {
    return fail_with(ctx, MS_FAILED, "out of memory");
  } catch (const std::exception& e) {
    const modalsim::CommandResult r = modalsim::error_result(e);
    return fail_with(ctx, r.status, r.message);
  }
}

modalsim::RunOverrides overrides_from(const ms_run_options* o) {
  modalsim::RunOverrides r;
  r.threads = modalsim::threads_from_env(1);
  if (o == nullptr) return r;
  if (o->seed != 0) r.seed = o->seed;
  if (o->n_traj != 0) r.n_traj = static_cast<std::size_t>(o->n_traj);
  if (o->dt != 0.0) r.dt = o->dt;
  if (o->threads > 0) r.threads = o->threads;
  r.format = o->format == MS_FORMAT_JSON ? modalsim::OutputFormat::kJson : modalsim::OutputFormat::kCsv;
  return r;
}

template <typename F>
int command(ms_context* ctx, ms_report** out, F&& body) {
  if (ctx == nullptr || out == nullptr) return MS_INVALID;
  *out = nullptr;
  try {
    *out = new ms_report{body()};
  } catch (const std::bad_alloc&) {
    return fail_with(ctx, MS_FAILED, "out of memory");
  }
  const int status = (*out)->result.status;
  ctx->last_error = status == MS_OK ? std::string() : (*out)->result.message;
  return status;
}

}  // namespace

extern "C" {

const char* ms_version(void) { return "0.1.0"; }

ms_context* ms_context_create(void) { return new (std::nothrow) ms_context(); }

void ms_context_destroy(ms_context* ctx) { delete ctx; }

const char* ms_last_error(const ms_context* ctx) { return ctx == nullptr ? "" : ctx->last_error.c_str(); }

int ms_scenario_from_file(ms_context* ctx, const char* path, ms_scenario** out) {
  if (path == nullptr) return fail_with(ctx, MS_INVALID, "null path");
  return load(ctx, out, [&] { return modalsim::load_scenario_file(path); });
}

int ms_scenario_from_json(ms_context* ctx, const char* json_text, ms_scenario** out) {
  if (json_text == nullptr) return fail_with(ctx, MS_INVALID, "null JSON text");
  return load(ctx, out, [&] { return modalsim::parse_scenario_text(json_text); });
}

int ms_scenario_preset(ms_context* ctx, const char* name, ms_scenario** out) {
  if (name == nullptr) return fail_with(ctx, MS_INVALID, "null preset name");
  return load(ctx, out, [&] { return modalsim::preset_scenario(name); });
}

void ms_scenario_destroy(ms_scenario* scenario) { delete scenario; }

void ms_run_options_init(ms_run_options* options) {
  if (options == nullptr) return;
  options->seed = 0;
  options->n_traj = 0;
  options->dt = 0.0;
  options->threads = 0;
  options->format = MS_FORMAT_CSV;
}

int ms_decompose(ms_context* ctx, const ms_scenario* scenario, const ms_run_options* options, ms_report** out) {
  if (scenario == nullptr) return fail_with(ctx, MS_INVALID, "null scenario");
  return command(ctx, out, [&] { return modalsim::cmd_decompose(scenario->scenario, overrides_from(options)); });
}

int ms_run(ms_context* ctx, const ms_scenario* scenario, const ms_run_options* options, ms_report** out) {
  if (scenario == nullptr) return fail_with(ctx, MS_INVALID, "null scenario");
  return command(ctx, out, [&] { return modalsim::cmd_run(scenario->scenario, overrides_from(options)); });
}

int ms_verify(ms_context* ctx, uint64_t seed, int faulty_rate_rule, const ms_run_options* options, ms_report** out) {
  return command(ctx, out, [&] {
    modalsim::VerifyOptions v;
    v.seed = seed == 0 ? 1 : seed;
    v.faulty_rate_rule = faulty_rate_rule != 0;
    v.threads = overrides_from(options).threads;
    return modalsim::cmd_verify(v);
  });
}

int ms_faithfulness(ms_context* ctx, const ms_scenario* scenario, const ms_run_options* options, ms_report** out) {
  if (scenario == nullptr) return fail_with(ctx, MS_INVALID, "null scenario");
  return command(ctx, out, [&] { return modalsim::cmd_faithfulness(scenario->scenario, overrides_from(options)); });
}

int ms_report_status(const ms_report* report) { return report == nullptr ? MS_INVALID : report->result.status; }

const char* ms_report_message(const ms_report* report) {
  return report == nullptr ? "" : report->result.message.c_str();
}

size_t ms_report_artifact_count(const ms_report* report) {
  return report == nullptr ? 0 : report->result.artifacts.size();
}

const char* ms_report_artifact_name(const ms_report* report, size_t index) {
  if (report == nullptr || index >= report->result.artifacts.size()) return nullptr;
  return report->result.artifacts[index].name.c_str();
}

const char* ms_report_artifact_data(const ms_report* report, size_t index, size_t* size) {
  if (report == nullptr || index >= report->result.artifacts.size()) {
    if (size != nullptr) *size = 0;
    return nullptr;
  }
  const std::string& c = report->result.artifacts[index].content;
  if (size != nullptr) *size = c.size();
  return c.c_str();
}

int ms_report_write(ms_context* ctx, const ms_report* report, const char* directory) {
  if (report == nullptr || directory == nullptr) return fail_with(ctx, MS_INVALID, "null report or directory");
  try {
    modalsim::write_artifacts(report->result, directory);
    return MS_OK;
  } catch (const std::exception& e) {
    return fail_with(ctx, MS_INVALID, e.what());
  }
}

void ms_report_destroy(ms_report* report) { delete report; }

}  // extern "C"
