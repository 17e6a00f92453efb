#ifndef CM_COMPETE_H
#define CM_COMPETE_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Tie rules by code, in the order of the enum.
 */
#define CM_TIE_ALWAYS_RED 0

#define CM_TIE_ALWAYS_BLUE 1

#define CM_TIE_FAIR_COIN 2

#define CM_TIE_NEIGHBOR_PROPORTIONAL 3

/**
 * Vertex colors reported by [`cm_outcome_vertex`].
 */
#define CM_UNPAINTED 0

#define CM_RED 1

#define CM_BLUE 2

/**
 * Result codes.
 */
enum CmStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  CM_STATUS_OK = 0,
  CM_STATUS_NULL_POINTER = 1,
  CM_STATUS_INVALID_ARGUMENT = 2,
  CM_STATUS_DOMAIN = 3,
  CM_STATUS_TOO_LARGE = 4,
  CM_STATUS_IO = 5,
  CM_STATUS_FORMAT = 6,
  CM_STATUS_INCOMPLETE = 7,
  CM_STATUS_BUFFER_TOO_SMALL = 8,
  CM_STATUS_PANIC = 9,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum CmStatus CmStatus;
#else
typedef int32_t CmStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Opaque graph.
 */
typedef struct CmGraph CmGraph;

/**
 * Opaque competition result.
 */
typedef struct CmOutcome CmOutcome;

/**
 * Inputs of [`cm_predict_json`].
 */
typedef struct CmTheoryInputs {
  double log_log_n;
  double tau;
  double lambda;
  double rho_prime;
  double yr;
  double yb;
  double clogn;
  int32_t tie_rule;
} CmTheoryInputs;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf`.
 *
 * Returns the message length including the NUL, or 0 if there is none.
 * The copy is truncated to fit `len` bytes.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t cm_last_error_message(char *buf, size_t len);

/**
 * Builds a configuration-model graph with `n` power-law degrees.
 *
 * # Safety
 * `out` must be a valid pointer; on success it receives a handle to free
 * with [`cm_graph_free`].
 */
CmStatus cm_graph_build(uint64_t n, double tau, uint64_t seed, struct CmGraph **out);

/**
 * Builds a graph from an explicit degree sequence; an odd total is fixed
 * by lowering the last degree.
 *
 * # Safety
 * `degrees` must point to `len` readable values and `out` must be valid.
 */
CmStatus cm_graph_from_degrees(const uint32_t *degrees,
                               size_t len,
                               uint64_t seed,
                               struct CmGraph **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
CmStatus cm_graph_load(const char *path, struct CmGraph **out);

/**
 * # Safety
 * `graph` must come from this library and `path` be NUL-terminated.
 */
CmStatus cm_graph_save(const struct CmGraph *graph, const char *path);

/**
 * Number of vertices, 0 for a null handle.
 *
 * # Safety
 * `graph` must be null or come from this library.
 */
uint64_t cm_graph_vertex_count(const struct CmGraph *graph);

/**
 * Total number of half-edges, 0 for a null handle.
 *
 * # Safety
 * `graph` must be null or come from this library.
 */
uint64_t cm_graph_half_edges(const struct CmGraph *graph);

/**
 * # Safety
 * `graph` must come from this library and `out` be valid.
 */
CmStatus cm_graph_degree(const struct CmGraph *graph, uint32_t vertex, uint32_t *out);

/**
 * # Safety
 * `graph` must be null or a handle not yet freed.
 */
void cm_graph_free(struct CmGraph *graph);

/**
 * Runs the competition; blue needs `lambda_num / lambda_den` time units
 * per step against red's one.
 *
 * # Safety
 * `graph` must come from this library and `out` be valid; the result is
 * freed with [`cm_outcome_free`].
 */
CmStatus cm_run_competition(const struct CmGraph *graph,
                            uint64_t lambda_num,
                            uint64_t lambda_den,
                            uint32_t red_source,
                            uint32_t blue_source,
                            int32_t tie_rule_code,
                            uint64_t seed,
                            struct CmOutcome **out);

/**
 * # Safety
 * `outcome` must be null or come from this library.
 */
uint64_t cm_outcome_red_count(const struct CmOutcome *outcome);

/**
 * # Safety
 * `outcome` must be null or come from this library.
 */
uint64_t cm_outcome_blue_count(const struct CmOutcome *outcome);

/**
 * Largest degree among blue vertices.
 *
 * # Safety
 * `outcome` must be null or come from this library.
 */
uint32_t cm_outcome_dmax_blue(const struct CmOutcome *outcome);

/**
 * Writes the first blocking tick; returns 1 if there was one, 0 if not
 * and -1 for null arguments.
 *
 * # Safety
 * `outcome` and `out` must be valid.
 */
int32_t cm_outcome_first_block_tick(const struct CmOutcome *outcome, uint64_t *out);

/**
 * # Safety
 * `outcome` must come from this library and `color`/`tick` be valid;
 * `tick` receives `UINT64_MAX` for unpainted vertices.
 */
CmStatus cm_outcome_vertex(const struct CmOutcome *outcome,
                           uint32_t vertex,
                           uint8_t *color,
                           uint64_t *tick);

/**
 * # Safety
 * `outcome` must be null or a handle not yet freed.
 */
void cm_outcome_free(struct CmOutcome *outcome);

/**
 * Evaluates the prediction chain and writes the report as JSON.
 *
 * With a null or short `buf` the call fails with `BufferTooSmall` and
 * `needed` still receives the required size including the NUL.
 *
 * # Safety
 * `inputs` must be valid, `buf` null or `len` writable bytes, `needed`
 * null or valid.
 */
CmStatus cm_predict_json(const struct CmTheoryInputs *inputs,
                         char *buf,
                         size_t len,
                         size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CM_COMPETE_H */
