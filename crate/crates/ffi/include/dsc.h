#ifndef DSC_H
#define DSC_H

/* Generated from the dsc-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call in this ABI.
 */
typedef enum DscStatus {
  /**
   * Success; out-pointers have been written.
   */
  DSC_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  DSC_STATUS_NULL_ARGUMENT = 1,
  /**
   * Malformed input: bad JSON, unknown policy, node ids out of range, …
   */
  DSC_STATUS_INVALID_INPUT = 2,
  /**
   * An internal safety property failed; see the last error message.
   */
  DSC_STATUS_INVARIANT_VIOLATION = 3,
  /**
   * A panic was caught at the ABI boundary.
   */
  DSC_STATUS_PANIC = 4,
} DscStatus;

/**
 * An in-progress online coloring. Opaque; create with [`dsc_session_new`],
 * destroy with [`dsc_session_free`].
 */
typedef struct DscSession DscSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create a session over nodes `1..=n`.
 *
 * `policy` must be `"det"` (deterministic potential argmin) or `"rand"`
 * (uniform palette and color); `seed` feeds the `rand` policy and is
 * ignored by `det`. Writes the new session to `out`.
 *
 * # Safety
 *
 * `policy` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DscStatus dsc_session_new(uint32_t n,
                               const char *policy,
                               uint64_t seed,
                               struct DscSession **out);

/**
 * Color the next edge. `nodes`/`len` give the edge (1-based ids; order and
 * duplicates are tolerated). On success writes the chosen palette index and
 * color; either out-pointer may be NULL if the value is not wanted.
 *
 * # Safety
 *
 * `session` must come from [`dsc_session_new`] and `nodes` must point to
 * `len` readable `uint32_t`s.
 */
enum DscStatus dsc_session_color_edge(struct DscSession *session,
                                      const uint32_t *nodes,
                                      size_t len,
                                      uint32_t *out_palette,
                                      uint64_t *out_color);

/**
 * Number of fully used colors so far.
 *
 * # Safety
 *
 * `session` must come from [`dsc_session_new`]; `out` must be valid.
 */
enum DscStatus dsc_session_gain(const struct DscSession *session, uint64_t *out);

/**
 * Current value of the potential Φ (starts at `n`, never exceeds it under
 * the deterministic policy).
 *
 * # Safety
 *
 * `session` must come from [`dsc_session_new`]; `out` must be valid.
 */
enum DscStatus dsc_session_phi(const struct DscSession *session, double *out);

/**
 * Number of edges colored so far.
 *
 * # Safety
 *
 * `session` must come from [`dsc_session_new`]; `out` must be valid.
 */
enum DscStatus dsc_session_steps(const struct DscSession *session, uint64_t *out);

/**
 * Build the full run report (offline optimum, competitive verdict, and —
 * when `check` is set — the whole per-step checker battery) for the edges
 * colored so far, as owned JSON.
 *
 * # Safety
 *
 * `session` must come from [`dsc_session_new`]; `out` must be valid. Free
 * the string with [`dsc_string_free`].
 */
enum DscStatus dsc_session_report_json(const struct DscSession *session, bool check, char **out);

/**
 * Destroy a session. NULL is a no-op.
 *
 * # Safety
 *
 * `session` must come from [`dsc_session_new`] and not be used afterwards.
 */
void dsc_session_free(struct DscSession *session);

/**
 * One-shot: parse an instance from JSON (`{"n": …, "edges": [[…], …]}`),
 * run the named policy (`"det"`, `"rand"`, or `"greedy"`) over it, and
 * return the run report as owned JSON.
 *
 * # Safety
 *
 * `instance_json` and `policy` must be NUL-terminated strings; `out_report`
 * must be valid. Free the result with [`dsc_string_free`].
 */
enum DscStatus dsc_run_json(const char *instance_json,
                            const char *policy,
                            uint64_t seed,
                            bool check,
                            char **out_report);

/**
 * Free a string returned by this library. NULL is a no-op.
 *
 * # Safety
 *
 * `s` must have been returned by this library and not freed before.
 */
void dsc_string_free(char *s);

/**
 * Copy of the calling thread's most recent error message, or NULL when no
 * error has occurred. Free it with [`dsc_string_free`].
 */
char *dsc_last_error_message(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* DSC_H */
