#ifndef ONTOCLUST_H
#define ONTOCLUST_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. The first five match the command-line exit codes.
 */
typedef enum OcStatus {
  OC_STATUS_OK = 0,
  OC_STATUS_USAGE = 1,
  OC_STATUS_DATA = 2,
  OC_STATUS_ONTOLOGY = 3,
  OC_STATUS_INTERNAL = 4,
  OC_STATUS_NULL_POINTER = 5,
  OC_STATUS_INVALID_UTF8 = 6,
  OC_STATUS_BUFFER_TOO_SMALL = 7,
} OcStatus;

/**
 * Loaded, normalized feature matrix with its ingest report.
 */
typedef struct OcData OcData;

/**
 * Parsed and validated ontology.
 */
typedef struct OcOntology OcOntology;

/**
 * Evaluation report of a full pipeline run.
 */
typedef struct OcReport OcReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none. The
 * pointer stays valid until the next failing call on this thread.
 */
const char *oc_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a pointer obtained from this library and not yet freed.
 */
void oc_string_free(char *s);

/**
 * Parses ontology text into a new handle.
 *
 * # Safety
 * `source` must be a nul-terminated string; `out` must be writable.
 */
enum OcStatus oc_ontology_parse(const char *source, struct OcOntology **out);

/**
 * Number of levels.
 *
 * # Safety
 * `o` must be a live handle; `out` must be writable.
 */
enum OcStatus oc_ontology_depth(const struct OcOntology *o, size_t *out);

/**
 * Number of concepts at `level` (1-based).
 *
 * # Safety
 * `o` must be a live handle; `out` must be writable.
 */
enum OcStatus oc_ontology_level_size(const struct OcOntology *o, size_t level, size_t *out);

/**
 * # Safety
 * `o` must be null or a live handle; it is invalid afterwards.
 */
void oc_ontology_free(struct OcOntology *o);

/**
 * Loads CSV text and min-max normalizes its feature columns. `schema` may
 * be null, in which case every column is a feature.
 *
 * # Safety
 * `csv` and non-null `schema` must be nul-terminated strings; `out` must be
 * writable.
 */
enum OcStatus oc_data_load(const char *csv, const char *schema, struct OcData **out);

/**
 * Record and feature counts of a loaded matrix, and rows dropped at load.
 *
 * # Safety
 * `d` must be a live handle; every out pointer must be writable.
 */
enum OcStatus oc_data_shape(const struct OcData *d, size_t *rows, size_t *cols, size_t *dropped);

/**
 * # Safety
 * `d` must be null or a live handle; it is invalid afterwards.
 */
void oc_data_free(struct OcData *d);

/**
 * Projects the data onto `level`, writing the row-major values into `buf`.
 * `cols` always receives the level width. If `capacity` is smaller than
 * rows × cols nothing is written and `BufferTooSmall` is returned, so a
 * call with `capacity = 0` queries the size.
 *
 * # Safety
 * `d` and `o` must be live handles; `buf` must hold `capacity` doubles
 * (or be null when `capacity` is 0); `cols` must be writable.
 */
enum OcStatus oc_project(const struct OcData *d,
                         const struct OcOntology *o,
                         size_t level,
                         double *buf,
                         size_t capacity,
                         size_t *cols);

/**
 * Runs the whole pipeline with default genetic-search settings and the
 * given seed. `level_space` selects own-level SSE for the improvements
 * instead of the level-1 space. `schema` may be null.
 *
 * # Safety
 * `csv` and non-null `schema` must be nul-terminated strings; `o` must be
 * a live handle; `out` must be writable.
 */
enum OcStatus oc_run(const char *csv,
                     const char *schema,
                     const struct OcOntology *o,
                     uint64_t seed,
                     bool level_space,
                     struct OcReport **out);

/**
 * Report as JSON. Release the string with [`oc_string_free`].
 *
 * # Safety
 * `r` must be a live handle; `out` must be writable.
 */
enum OcStatus oc_report_json(const struct OcReport *r, char **out);

/**
 * Number of levels in the report.
 *
 * # Safety
 * `r` must be a live handle; `out` must be writable.
 */
enum OcStatus oc_report_levels(const struct OcReport *r, size_t *out);

/**
 * Cluster count and both SSE values of the `index`-th level (0-based).
 *
 * # Safety
 * `r` must be a live handle; every out pointer must be writable.
 */
enum OcStatus oc_report_level(const struct OcReport *r,
                              size_t index,
                              size_t *k,
                              double *sse_original,
                              double *sse_level);

/**
 * Total improvement percentage.
 *
 * # Safety
 * `r` must be a live handle; `out` must be writable.
 */
enum OcStatus oc_report_total_improvement(const struct OcReport *r, double *out);

/**
 * # Safety
 * `r` must be null or a live handle; it is invalid afterwards.
 */
void oc_report_free(struct OcReport *r);

/**
 * Percentage SSE improvement from `sse_prev` to `sse_next`.
 *
 * # Safety
 * `out` must be writable.
 */
enum OcStatus oc_step_improvement(double sse_prev, double sse_next, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ONTOCLUST_H */
