/*
 * Copyright 2026 The fvsr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * fvsr: symbolic regression with factor variables.
 *
 * C interface of libfvsr. Objects are opaque handles owned by the caller and
 * released with the matching *_free function. Every fallible call returns an
 * fvsr_status; on failure fvsr_last_error() describes the problem for the
 * calling thread. Strings returned through char** are allocated by the
 * library and released with fvsr_string_free().
 */

#ifndef FVSR_FVSR_H_
#define FVSR_FVSR_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(FVSR_BUILDING)
#define FVSR_API __declspec(dllexport)
#else
#define FVSR_API __declspec(dllimport)
#endif
#else
#define FVSR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* The nonzero codes double as command line exit codes. */
typedef enum fvsr_status {
  FVSR_OK = 0,
  FVSR_ERR_USAGE = 1,    /* bad argument, option or configuration value */
  FVSR_ERR_DATA = 2,     /* unreadable, malformed or incompatible data */
  FVSR_ERR_NUMERIC = 3,  /* no finite result could be computed */
  FVSR_ERR_INTERNAL = 4  /* anything else, e.g. out of memory */
} fvsr_status;

typedef struct fvsr_dataset fvsr_dataset;
typedef struct fvsr_config fvsr_config;
typedef struct fvsr_model fvsr_model;

FVSR_API const char* fvsr_version(void);
/* Message of the last failed call on this thread; "" if none. */
FVSR_API const char* fvsr_last_error(void);
FVSR_API const char* fvsr_status_name(fvsr_status status);
FVSR_API void fvsr_string_free(char* s);

/* ------------------------------------------------------------ datasets */

/* target may be NULL or "" to use the last column. */
FVSR_API fvsr_status fvsr_dataset_load_csv(const char* path, const char* target, fvsr_dataset** out);
FVSR_API fvsr_status fvsr_dataset_save_csv(const fvsr_dataset* data, const char* path);
FVSR_API fvsr_status fvsr_dataset_csv(const fvsr_dataset* data, char** out);
FVSR_API size_t fvsr_dataset_rows(const fvsr_dataset* data);
FVSR_API size_t fvsr_dataset_columns(const fvsr_dataset* data);
FVSR_API void fvsr_dataset_free(fvsr_dataset* data);

typedef struct fvsr_synth_options {
  double x_min;
  double x_max;
  double step;
  const char* levels; /* comma separated subset of A,B,C,D */
  double noise;       /* multiplicative Gaussian noise level */
  uint64_t noise_seed;
} fvsr_synth_options;

FVSR_API void fvsr_synth_options_init(fvsr_synth_options* opts);
FVSR_API fvsr_status fvsr_dataset_synthetic(const fvsr_synth_options* opts, fvsr_dataset** out);

/* ------------------------------------------------------------ fitting */

/* mode is "factor", "onehot" or "linear"; it fixes the GP defaults. */
FVSR_API fvsr_status fvsr_config_create(const char* mode, fvsr_config** out);
/*
 * Any GP key (population_size, generations, max_tree_nodes, function_set,
 * seed, ...) plus runs, train_fraction, split (stratified, leading,
 * interleaved), split_seed, stratify_by, scale and filter ("col=value",
 * repeatable).
 */
FVSR_API fvsr_status fvsr_config_set(fvsr_config* config, const char* key, const char* value);
/* "key = value" lines with '#' comments, applied with fvsr_config_set. */
FVSR_API fvsr_status fvsr_config_load_file(fvsr_config* config, const char* path);
FVSR_API fvsr_status fvsr_config_text(const fvsr_config* config, char** out);
typedef void (*fvsr_progress_fn)(size_t generation, double best_mse, size_t best_size, void* user);
FVSR_API void fvsr_config_set_progress(fvsr_config* config, fvsr_progress_fn fn, void* user);
FVSR_API void fvsr_config_free(fvsr_config* config);

/*
 * Fits a model on data with the configured split. report, if not NULL,
 * receives the key=value run report; warnings, if not NULL, receives
 * newline separated warnings (possibly "").
 */
FVSR_API fvsr_status fvsr_fit(const fvsr_dataset* data, const fvsr_config* config, const char* name,
                              fvsr_model** model, char** report, char** warnings);

/* ------------------------------------------------------------ models */

/* A model file plus its "<path>.schema.json" sidecar. */
FVSR_API fvsr_status fvsr_model_load(const char* path, fvsr_model** out);
FVSR_API fvsr_status fvsr_model_save(const fvsr_model* model, const char* path);
FVSR_API fvsr_status fvsr_model_text(const fvsr_model* model, char** out);
FVSR_API const char* fvsr_model_kind(const fvsr_model* model);
FVSR_API void fvsr_model_free(fvsr_model* model);

/* Reads a CSV with the column kinds the model expects. */
FVSR_API fvsr_status fvsr_model_load_csv(const fvsr_model* model, const char* path, fvsr_dataset** out);
/* out must hold fvsr_dataset_rows(data) values. */
FVSR_API fvsr_status fvsr_model_predict(const fvsr_model* model, const fvsr_dataset* data, double* out, size_t n);
/*
 * Copies the input CSV to output_path with a "prediction" column appended.
 * Unseen nominal levels fail with FVSR_ERR_DATA and one line per offending
 * cell in fvsr_last_error().
 */
FVSR_API fvsr_status fvsr_model_predict_csv(const fvsr_model* model, const char* input_path,
                                            const char* output_path);

typedef struct fvsr_pdp_spec {
  const char* sweep;
  size_t grid_points;
  const char* by;     /* nominal column; NULL picks the first one */
  const char* levels; /* comma separated; NULL means all */
  const char* fixed;  /* comma separated col=value overrides; may be NULL */
  int has_min;
  double min;
  int has_max;
  double max;
} fvsr_pdp_spec;

FVSR_API void fvsr_pdp_spec_init(fvsr_pdp_spec* spec);
/* reference is raw data, normally the training file. Writes CSV text. */
FVSR_API fvsr_status fvsr_pdp(const fvsr_model* model, const fvsr_dataset* reference, const fvsr_pdp_spec* spec,
                              char** out);

/* ------------------------------------------------------------ reports */

/* external entries are "name=average relative error percent". */
FVSR_API fvsr_status fvsr_report_table(const char* const* reports, size_t report_count,
                                       const char* const* external, size_t external_count, char** table,
                                       char** warnings);

#ifdef __cplusplus
}
#endif

#endif /* FVSR_FVSR_H_ */
