/* C interface for the baryloc range-only localization toolkit. */

#ifndef BARYLOC_H
#define BARYLOC_H

/* Generated by cbindgen from the baryloc-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define BARYLOC_SOLVER_DIRECT 0

#define BARYLOC_SOLVER_ITERATIVE 1

#define BARYLOC_PATHS_VERTEX_DISJOINT 0

#define BARYLOC_PATHS_EDGE_DISJOINT 1

/**
 * Result of every fallible entry point.
 */
typedef enum BarylocStatus {
  BarylocStatus_Ok = 0,
  /**
   * A required pointer argument was null.
   */
  BarylocStatus_NullArgument = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  BarylocStatus_InvalidUtf8 = 2,
  /**
   * The document could not be parsed.
   */
  BarylocStatus_ParseError = 3,
  /**
   * Arguments were structurally valid but semantically wrong
   * (inconsistent document, bad option values, index out of range).
   */
  BarylocStatus_InvalidArgument = 4,
  /**
   * The pipeline could not produce a system (degenerate geometry).
   */
  BarylocStatus_NumericalFailure = 5,
  /**
   * Reading the input file failed.
   */
  BarylocStatus_IoError = 6,
  /**
   * A panic was caught at the boundary; state may be stale but the
   * process is intact.
   */
  BarylocStatus_InternalPanic = 7,
} BarylocStatus;

/**
 * Terminal state of a solve, mirrored from the core library.
 */
typedef enum BarylocSolveStatus {
  BarylocSolveStatus_Solved = 0,
  BarylocSolveStatus_Singular = 1,
  BarylocSolveStatus_Diverged = 2,
} BarylocSolveStatus;

/**
 * Opaque handle to a parsed sensor network.
 */
typedef struct BarylocNetwork BarylocNetwork;

/**
 * Opaque handle to the output of one localization run.
 */
typedef struct BarylocResult BarylocResult;

/**
 * Plain-data solve options. Zero-initialization gives the defaults except
 * for `max_iters` and `tol`; prefer [`baryloc_options_default`].
 */
typedef struct BarylocOptions {
  /**
   * Per-branch subset cap; 0 means unlimited.
   */
  uint64_t subset_cap;
  /**
   * `BARYLOC_SOLVER_DIRECT` or `BARYLOC_SOLVER_ITERATIVE`.
   */
  uint32_t solver;
  /**
   * Iteration limit for the iterative solver.
   */
  uint64_t max_iters;
  /**
   * Convergence tolerance for the iterative solver.
   */
  double tol;
  /**
   * Required disjoint-path count for the connectivity diagnostic;
   * 0 skips the diagnostic.
   */
  uint64_t diagnostic_paths;
  /**
   * `BARYLOC_PATHS_VERTEX_DISJOINT` or `BARYLOC_PATHS_EDGE_DISJOINT`.
   */
  uint32_t path_mode;
} BarylocOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent non-`Ok` status on this thread. Never null;
 * empty when no error has occurred. The pointer is invalidated by the next
 * failing call on the same thread.
 */
const char *baryloc_last_error(void);

/**
 * Parse a network document from a JSON string into a new handle.
 */
enum BarylocStatus baryloc_network_from_json(const char *json, struct BarylocNetwork **out);

/**
 * Read and parse a network document from a file path.
 */
enum BarylocStatus baryloc_network_load(const char *path, struct BarylocNetwork **out);

/**
 * Release a network handle. Null is a no-op.
 */
void baryloc_network_free(struct BarylocNetwork *net);

enum BarylocStatus baryloc_network_dimension(const struct BarylocNetwork *net, uint32_t *out);

enum BarylocStatus baryloc_network_node_count(const struct BarylocNetwork *net, uint64_t *out);

enum BarylocStatus baryloc_network_anchor_count(const struct BarylocNetwork *net, uint64_t *out);

/**
 * Write the default options: unlimited cap, direct solver, diagnostic off.
 */
enum BarylocStatus baryloc_options_default(struct BarylocOptions *out);

/**
 * Run prune, enumeration, assembly and solve on the network. `opts` may be
 * null for the defaults. A solve that terminates as singular or diverged
 * still returns `Ok`; inspect the result's solve status.
 */
enum BarylocStatus baryloc_localize(const struct BarylocNetwork *net,
                                    const struct BarylocOptions *opts,
                                    struct BarylocResult **out);

/**
 * Release a result handle. Null is a no-op.
 */
void baryloc_result_free(struct BarylocResult *res);

enum BarylocStatus baryloc_result_solve_status(const struct BarylocResult *res,
                                               enum BarylocSolveStatus *out);

enum BarylocStatus baryloc_result_dimension(const struct BarylocResult *res, uint32_t *out);

enum BarylocStatus baryloc_result_rcond(const struct BarylocResult *res, double *out);

/**
 * Iteration count of the iterative solver; 0 for the direct solver.
 */
enum BarylocStatus baryloc_result_iterations(const struct BarylocResult *res, uint64_t *out);

enum BarylocStatus baryloc_result_position_count(const struct BarylocResult *res, uint64_t *out);

/**
 * Fetch the position at `index` (ascending node id order). `coords` must
 * hold at least the network dimension; `coords_len` is checked.
 */
enum BarylocStatus baryloc_result_position(const struct BarylocResult *res,
                                           uint64_t index,
                                           uint32_t *id_out,
                                           double *coords,
                                           uint64_t coords_len);

enum BarylocStatus baryloc_result_pruned_count(const struct BarylocResult *res, uint64_t *out);

enum BarylocStatus baryloc_result_pruned_id(const struct BarylocResult *res,
                                            uint64_t index,
                                            uint32_t *out);

/**
 * Serialize the full result document (status, rcond, pruned ids, positions,
 * diagnostics, timings) as JSON. Free the string with
 * [`baryloc_string_free`].
 */
enum BarylocStatus baryloc_result_to_json(const struct BarylocResult *res, char **out);

/**
 * Release a string returned by this library. Null is a no-op.
 */
void baryloc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BARYLOC_H */
