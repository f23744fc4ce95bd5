#ifndef PHENO_PHENO_H
#define PHENO_PHENO_H

#include <stddef.h>
#include <stdint.h>

#if defined(PHENO_BUILDING_LIBRARY)
#define PHENO_API __attribute__((visibility("default")))
#else
#define PHENO_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pheno_status {
  PHENO_OK = 0,
  PHENO_ERR_RUNTIME = 1,
  PHENO_ERR_CONFIG = 2,
  PHENO_ERR_IO = 3,
  PHENO_ERR_INVALID_ARGUMENT = 4,
  PHENO_ERR_DIVERGED = 5,
  PHENO_ERR_DATA = 6
} pheno_status;

typedef struct pheno_context pheno_context;
typedef struct pheno_manifest pheno_manifest;
typedef struct pheno_model pheno_model;

/* Receives one status line at a time (notices, summaries). */
typedef void (*pheno_log_fn)(const char* line, void* user);

PHENO_API const char* pheno_version(void);
PHENO_API const char* pheno_status_string(pheno_status status);

PHENO_API pheno_status pheno_context_create(pheno_context** out);
PHENO_API void pheno_context_destroy(pheno_context* ctx);
/* Message of the most recent failure on this context; "" if none. */
PHENO_API const char* pheno_last_error(const pheno_context* ctx);
/* NULL restores the default (stderr). */
PHENO_API void pheno_context_set_log(pheno_context* ctx, pheno_log_fn fn, void* user);

/* Run configs are JSON objects; missing keys take defaults. The returned
 * strings are owned by the context and valid until its next call. */
PHENO_API pheno_status pheno_config_default(pheno_context* ctx, const char** json_out);
PHENO_API pheno_status pheno_config_resolve(pheno_context* ctx, const char* json_in, const char** json_out);

/* command: synthesize, ingest, encode, analyze, balance, train, evaluate,
 * subset-study, report. */
PHENO_API pheno_status pheno_run(pheno_context* ctx, const char* command, const char* config_json);

/* ---- manifests ---- */

PHENO_API pheno_status pheno_manifest_load(pheno_context* ctx, const char* path, pheno_manifest** out);
PHENO_API void pheno_manifest_free(pheno_manifest* manifest);
PHENO_API size_t pheno_manifest_size(const pheno_manifest* manifest);
/* Borrowed pointer, valid for the manifest's lifetime. */
PHENO_API const char* pheno_manifest_plot_id(const pheno_manifest* manifest, size_t index);
/* 1 if the record is labeled (rating written to *rating), else 0. */
PHENO_API int pheno_manifest_rating(const pheno_manifest* manifest, size_t index, double* rating);
PHENO_API int pheno_manifest_valid(const pheno_manifest* manifest, size_t index);
PHENO_API size_t pheno_manifest_timepoints(const pheno_manifest* manifest, size_t index);

/* ---- unit operations ---- */

/* Half-degree hue bin in [0, 180); achromatic pixels give 0. */
PHENO_API int pheno_rgb_to_hue(uint8_t r, uint8_t g, uint8_t b);
/* rgb is width*height interleaved triplets. */
PHENO_API pheno_status pheno_mean_exg(pheno_context* ctx, const uint8_t* rgb, int width, int height, double* out);
/* scheme: seven, five, four-first, four-second. */
PHENO_API pheno_status pheno_assign_label(pheno_context* ctx, double rating, const char* scheme, int* label);
/* tp_max / tp_min are 0-based; *valid is 0 when the window is too short. */
PHENO_API pheno_status pheno_extract_slope(pheno_context* ctx, const double* values, size_t n, double* slope,
                                           int* tp_max, int* tp_min, int* valid);
/* Writes up to `capacity` 1-based indices; *count receives the full length. */
PHENO_API pheno_status pheno_subset_indices(pheno_context* ctx, const char* mode, int* out, size_t capacity,
                                            size_t* count);

/* ---- models ---- */

PHENO_API pheno_status pheno_model_load(pheno_context* ctx, const char* path, pheno_model** out);
PHENO_API void pheno_model_free(pheno_model* model);
PHENO_API size_t pheno_model_num_labels(const pheno_model* model);
/* features: 32*64 values in [0,1], time-major. probs (optional, may be NULL)
 * receives one probability per label, in label order 1..K. */
PHENO_API pheno_status pheno_model_predict(pheno_context* ctx, const pheno_model* model, const double* features,
                                           size_t n, int* label, double* probs, size_t probs_capacity);

#ifdef __cplusplus
}
#endif

#endif
