/* Copyright 2026 The rtnmpc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C API of the rtnmpc shared library: trajectory-tracking NMPC with a
 * real-time-iteration controller, a converged-SQP baseline and a
 * closed-loop vehicle simulator.
 *
 * All functions returning int use the RTN_* codes below; on any failure
 * rtn_last_error() describes the problem (thread-local storage, valid
 * until the next API call on the same thread).
 */

#ifndef RTNMPC_H_
#define RTNMPC_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define RTN_OK 0
#define RTN_ERR_ARGUMENT 1    /* bad pointer, size, or enum value */
#define RTN_ERR_PARSE 2       /* malformed config text */
#define RTN_ERR_VALIDATION 3  /* config rejected; message lists the keys */
#define RTN_ERR_RUNTIME 4     /* solver/integration failure or I/O error */
#define RTN_ERR_VERIFICATION 5

typedef struct rtn_config rtn_config;
typedef struct rtn_log rtn_log;
typedef struct rtn_controller rtn_controller;

const char* rtn_version(void);
const char* rtn_last_error(void);

/* ---- configuration ----------------------------------------------------- */

rtn_config* rtn_config_default(void);
rtn_config* rtn_config_load(const char* path);
void rtn_config_free(rtn_config* config);

/* Keys use the form "section.key" as in the config file. */
int rtn_config_set(rtn_config* config, const char* key, const char* value);
int rtn_config_get(const rtn_config* config, const char* key, char* buffer,
                   size_t capacity);
/* Newline-separated list of every known key. */
int rtn_config_keys(const rtn_config* config, char* buffer, size_t capacity);
int rtn_config_validate(const rtn_config* config);
int rtn_config_save(const rtn_config* config, const char* path);

/* ---- closed-loop simulation -------------------------------------------- */

/* mode is "rti" or "sqp". The returned log must be freed by the caller.
 * Returns RTN_ERR_RUNTIME with a partial log (still written to *out) when
 * the run aborts on a non-finite state. */
int rtn_run_closed_loop(const rtn_config* config, const char* mode,
                        rtn_log** out);

int rtn_log_steps(const rtn_log* log);
int rtn_log_write_csv(const rtn_log* log, const char* path,
                      int include_timing);
int rtn_log_write_summary(const rtn_log* log, const char* path);
/* Summary keys: rms_tracking_error, max_tracking_error, mean_step_time,
 * p95_step_time, max_step_time, constraint_violations, steps, aborted. */
int rtn_log_summary_value(const rtn_log* log, const char* key, double* value);
/* Extracts a numeric CSV column ("input_torque", "tracking_error", ...). */
int rtn_log_column(const rtn_log* log, const char* column, double* buffer,
                   size_t capacity, size_t* length);
void rtn_log_free(rtn_log* log);

/* ---- verification suites ------------------------------------------------ */

/* suite: "all", "jacobian", "euler", "qp" or "dynamics". The report text
 * is written to report_path (or stdout when NULL). Returns RTN_OK when all
 * checks pass, RTN_ERR_VERIFICATION otherwise. inject_jacobian_bug flips a
 * deliberate defect into the jacobian suite to prove it detects one. */
int rtn_verify(const char* suite, int inject_jacobian_bug,
               const char* report_path);

/* ---- controller embedding ----------------------------------------------- */

/* A standalone controller on the bicycle prediction model configured from
 * `config`; mode is "rti" or "sqp". State layout (9 doubles):
 * p_x, p_y, yaw, v_x, v_y, yaw_rate, wheel_front, wheel_rear, steer.
 * The reference holds horizon+1 triplets (p_x, p_y, v_x); the tracked
 * heading reference is derived internally from the chord directions of
 * consecutive points. */
rtn_controller* rtn_controller_create(const rtn_config* config,
                                      const char* mode);
int rtn_controller_horizon(const rtn_controller* controller);
int rtn_controller_initialize(rtn_controller* controller,
                              const double* state9, const double* input2);
/* Computes the input to apply from the next sample instant on. */
int rtn_controller_step(rtn_controller* controller, const double* state9,
                        const double* reference, size_t reference_len,
                        double* input2, double* step_time);
void rtn_controller_free(rtn_controller* controller);

#ifdef __cplusplus
}
#endif

#endif /* RTNMPC_H_ */
