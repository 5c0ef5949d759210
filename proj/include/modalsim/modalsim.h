/* Copyright 2026 The modalsim Authors.
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the modalsim library. Objects are opaque handles; every
 * call returns one of the MS_* status codes. Reports own their artifacts
 * (file name plus bytes) until ms_report_destroy.
 */
#ifndef MODALSIM_MODALSIM_H_
#define MODALSIM_MODALSIM_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MS_API __declspec(dllexport)
#else
#define MS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum ms_status {
  MS_OK = 0,
  MS_FAILED = 1,     /* a verification or faithfulness check did not hold */
  MS_UNRESOLVED = 2, /* entropy minimization unresolved */
  MS_INVALID = 3,    /* malformed input or misuse of the API */
  MS_STEP_SIZE = 4   /* dt too coarse for the jump rates */
};

enum ms_format { MS_FORMAT_CSV = 0, MS_FORMAT_JSON = 1 };

typedef struct ms_context ms_context;
typedef struct ms_scenario ms_scenario;
typedef struct ms_report ms_report;

typedef struct ms_run_options {
  uint64_t seed;   /* 0 keeps the scenario's seed */
  uint64_t n_traj; /* 0 keeps the scenario's ensemble size */
  double dt;       /* 0 keeps the scenario's step */
  int threads;     /* 0 reads MODALSIM_THREADS, default 1 */
  int format;      /* ms_format */
} ms_run_options;

MS_API const char* ms_version(void);

MS_API ms_context* ms_context_create(void);
MS_API void ms_context_destroy(ms_context* ctx);
/* Message of the last failed call on this context; empty when none. */
MS_API const char* ms_last_error(const ms_context* ctx);

MS_API int ms_scenario_from_file(ms_context* ctx, const char* path, ms_scenario** out);
MS_API int ms_scenario_from_json(ms_context* ctx, const char* json_text, ms_scenario** out);
MS_API int ms_scenario_preset(ms_context* ctx, const char* name, ms_scenario** out);
MS_API void ms_scenario_destroy(ms_scenario* scenario);

MS_API void ms_run_options_init(ms_run_options* options);

/* Each command stores a report in *out, also when it returns a nonzero
 * status (the report then carries the diagnostic message). */
MS_API int ms_decompose(ms_context* ctx, const ms_scenario* scenario, const ms_run_options* options,
                        ms_report** out);
MS_API int ms_run(ms_context* ctx, const ms_scenario* scenario, const ms_run_options* options, ms_report** out);
MS_API int ms_verify(ms_context* ctx, uint64_t seed, int faulty_rate_rule, const ms_run_options* options,
                     ms_report** out);
MS_API int ms_faithfulness(ms_context* ctx, const ms_scenario* scenario, const ms_run_options* options,
                           ms_report** out);

MS_API int ms_report_status(const ms_report* report);
MS_API const char* ms_report_message(const ms_report* report);
MS_API size_t ms_report_artifact_count(const ms_report* report);
MS_API const char* ms_report_artifact_name(const ms_report* report, size_t index);
/* Bytes of artifact `index`; *size receives the length. NUL-terminated. */
MS_API const char* ms_report_artifact_data(const ms_report* report, size_t index, size_t* size);
/* Writes all artifacts into `directory`. */
MS_API int ms_report_write(ms_context* ctx, const ms_report* report, const char* directory);
MS_API void ms_report_destroy(ms_report* report);

#ifdef __cplusplus
}
#endif

#endif /* MODALSIM_MODALSIM_H_ */
