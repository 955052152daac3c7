// Copyright 2026 The GRIP Engine Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GRIP__GRIP_C_H_
#define GRIP__GRIP_C_H_

/* C interface to the GRIP engine. Every call returns a grip_status; on
 * failure grip_last_error() holds a message for the calling thread. Objects
 * are opaque and owned by the caller once created. */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define GRIP_API __declspec(dllexport)
#else
#define GRIP_API __attribute__((visibility("default")))
#endif

typedef enum grip_status {
  GRIP_OK = 0,
  GRIP_ERR_USAGE = 1,
  GRIP_ERR_PARAMETER = 2,
  GRIP_ERR_DATA = 3,
  GRIP_ERR_IO = 4,
  GRIP_ERR_DIMENSION = 5,
  GRIP_ERR_CAPACITY = 6,
  GRIP_ERR_DIVERGENCE = 7,
  GRIP_ERR_INTERNAL = 8
} grip_status;

typedef struct grip_config grip_config;
typedef struct grip_clips grip_clips;
typedef struct grip_model grip_model;

/* Receives one human-readable progress line per call. */
typedef void (*grip_log_fn)(const char * line, void * user);

GRIP_API const char * grip_version(void);
GRIP_API const char * grip_last_error(void);
GRIP_API const char * grip_status_name(grip_status status);
GRIP_API void grip_string_free(char * text);

/* ---- run configuration ---------------------------------------------- */

GRIP_API grip_status grip_config_create(grip_config ** out);
GRIP_API grip_status grip_config_load(const char * path, grip_config ** out);
/* "section.key=value"; the value is a TOML literal or a bare string. */
GRIP_API grip_status grip_config_set(grip_config * config, const char * assignment);
/* Applies all assignments, then validates once. */
GRIP_API grip_status grip_config_set_many(grip_config * config, const char * const * assignments, size_t count);
/* Effective configuration as TOML; release with grip_string_free. */
GRIP_API grip_status grip_config_to_toml(const grip_config * config, char ** out);
/* Output directory after defaults and the GRIP_OUTPUT_ROOT variable. */
GRIP_API grip_status grip_config_output_dir(const grip_config * config, char ** out);
GRIP_API void grip_config_free(grip_config * config);

/* ---- clip sets -------------------------------------------------------- */

/* Clips of the config's data section (synthetic or file). */
GRIP_API grip_status grip_clips_from_config(const grip_config * config, grip_clips ** out);
/* format: "jsonl", "apolloscape", "csv", or NULL for the config's format.
 * Raw formats are downsampled and segmented per the ingest section. */
GRIP_API grip_status grip_clips_read(
  const grip_config * config, const char * path, const char * format, grip_clips ** out);
GRIP_API grip_status grip_clips_synthesize(const grip_config * config, grip_clips ** out);
GRIP_API grip_status grip_clips_write(const grip_clips * clips, const char * path);
GRIP_API size_t grip_clips_count(const grip_clips * clips);
GRIP_API void grip_clips_free(grip_clips * clips);

/* ---- training, prediction, evaluation ---------------------------------- */

/* Splits the clips per the config, trains, and writes model.grip (with its
 * model.grip.json sidecar), config.toml and train_log.csv into out_dir. */
GRIP_API grip_status grip_train(
  const grip_config * config, const grip_clips * clips, const char * out_dir, grip_log_fn log, void * user);

GRIP_API grip_status grip_model_load(const char * path, grip_model ** out);
GRIP_API void grip_model_free(grip_model * model);

/* Writes predictions.csv and submission.txt; with timing != 0 also
 * timing.csv (batch sizes 1 and 128, median of 20 warm runs). */
GRIP_API grip_status grip_predict(
  grip_model * model, const grip_clips * clips, const char * out_dir, int timing, grip_log_fn log, void * user);
/* Constant-velocity baseline predictions in the same file layout. */
GRIP_API grip_status grip_predict_cv(
  const grip_clips * clips, size_t k, const char * out_dir, grip_log_fn log, void * user);

/* Scores a predictions CSV against ground-truth clips; writes metrics.json
 * and metrics.csv. */
GRIP_API grip_status grip_eval(
  const char * predictions_csv, const grip_clips * truth, const char * out_dir, grip_log_fn log, void * user);

/* Runs a grid file; writes ablation.csv, dclose_sweep.csv and
 * location_errors.csv. */
GRIP_API grip_status grip_ablate(
  const grip_config * config, const char * grid_path, const char * out_dir, grip_log_fn log, void * user);

#ifdef __cplusplus
}
#endif

#endif /* GRIP__GRIP_C_H_ */
