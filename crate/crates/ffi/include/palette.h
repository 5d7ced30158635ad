/* SPDX-License-Identifier: Apache-2.0 */

#ifndef PALETTE_H
#define PALETTE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

#define PALETTE_DIAGRAM_1D 1

#define PALETTE_DIAGRAM_2D 2

typedef enum PaletteStatus {
  PALETTE_STATUS_OK = 0,
  PALETTE_STATUS_NULL_POINTER = 1,
  PALETTE_STATUS_INVALID_UTF8 = 2,
  PALETTE_STATUS_PARSE = 3,
  PALETTE_STATUS_VALIDATION = 4,
  PALETTE_STATUS_NUMERICAL = 5,
  PALETTE_STATUS_IO = 6,
  PALETTE_STATUS_INTERNAL = 7,
} PaletteStatus;

/**
 * Opaque partition ensemble.
 */
typedef struct PaletteEnsemble PaletteEnsemble;

/**
 * Opaque pipeline result: report plus both diagrams.
 */
typedef struct PaletteReport PaletteReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *palette_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *palette_last_error(void);

/**
 * Parse an ensemble from its JSON encoding.
 */
enum PaletteStatus palette_ensemble_from_json(const char *json, struct PaletteEnsemble **out);

/**
 * Generate a synthetic ensemble. `mode` is "hard", "soft" or "hierarchical-split".
 */
enum PaletteStatus palette_synthesize(size_t n,
                                      size_t k,
                                      size_t l,
                                      double eta,
                                      const char *mode,
                                      uint64_t seed,
                                      struct PaletteEnsemble **out);

void palette_ensemble_free(struct PaletteEnsemble *e);

/**
 * Number of vertices, or 0 for NULL.
 */
size_t palette_ensemble_n_vertices(const struct PaletteEnsemble *e);

size_t palette_ensemble_n_partitions(const struct PaletteEnsemble *e);

/**
 * Total number of groups over all partitions, empty ones included.
 */
size_t palette_ensemble_n_groups(const struct PaletteEnsemble *e);

/**
 * Content hash identifying the ensemble.
 */
enum PaletteStatus palette_ensemble_id(const struct PaletteEnsemble *e, char **out);

/**
 * Canonical JSON encoding of the ensemble.
 */
enum PaletteStatus palette_ensemble_json(const struct PaletteEnsemble *e, char **out);

/**
 * Run the full pipeline. `config_json` is a pipeline configuration object;
 * only `m` is required.
 */
enum PaletteStatus palette_run(const struct PaletteEnsemble *e,
                               const char *config_json,
                               struct PaletteReport **out);

void palette_report_free(struct PaletteReport *r);

/**
 * Report as pretty-printed JSON.
 */
enum PaletteStatus palette_report_json(const struct PaletteReport *r, char **out);

/**
 * Stage timings of the run as JSON.
 */
enum PaletteStatus palette_report_timings_json(const struct PaletteReport *r, char **out);

/**
 * SVG document; `kind` is `PALETTE_DIAGRAM_1D` or `PALETTE_DIAGRAM_2D`.
 */
enum PaletteStatus palette_report_svg(const struct PaletteReport *r, uint32_t kind, char **out);

size_t palette_report_n_vertices(const struct PaletteReport *r);

/**
 * Number of rows drawn in the diagrams.
 */
size_t palette_report_n_rows(const struct PaletteReport *r);

/**
 * Copy the vertex order into `out`, which must hold exactly `len` entries
 * with `len == palette_report_n_vertices(r)`.
 */
enum PaletteStatus palette_report_vertex_order(const struct PaletteReport *r,
                                               size_t *out,
                                               size_t len);

/**
 * Alpha-divergence between two distributions of length `n`.
 */
enum PaletteStatus palette_alpha_divergence(const double *p,
                                            const double *q,
                                            size_t n,
                                            double alpha,
                                            double *out);

/**
 * Release a string returned by this library. NULL is ignored.
 */
void palette_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PALETTE_H */
