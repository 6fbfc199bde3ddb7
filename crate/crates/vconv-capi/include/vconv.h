/* C interface for the vconv library. Generated by cbindgen; do not edit. */

#ifndef VCONV_H
#define VCONV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every entry point.
 */
typedef enum VconvStatus {
  VconvStatus_Ok = 0,
  VconvStatus_NullArgument = 1,
  VconvStatus_InvalidUtf8 = 2,
  VconvStatus_InvalidConfig = 3,
  VconvStatus_UnknownOp = 4,
  VconvStatus_RunFailed = 5,
} VconvStatus;

/**
 * Opaque session: a parsed configuration plus the last error message.
 */
typedef struct VconvSession VconvSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parse a JSON run configuration into a new session. `config_json` may be
 * null or empty for an all-defaults session. On success writes the handle
 * to `out_session`; free it with `vconv_session_free`.
 */
enum VconvStatus vconv_session_new(const char *config_json, struct VconvSession **out_session);

/**
 * Release a session created by `vconv_session_new`. Null is a no-op.
 */
void vconv_session_free(struct VconvSession *session);

/**
 * Run the named operation (`vdist`, `classify`, `cauchy`, `series`,
 * `abel`, `interchange`, `patch`, `corpus`) with the session's
 * configuration.
 *
 * On success writes the verdict (0 holds, 1 fails, 2 inconclusive) to
 * `out_verdict` and, when `out_json` is non-null, a newly allocated JSON
 * report to `*out_json`; release it with `vconv_string_free`. On failure
 * the message is available via `vconv_session_last_error`.
 */
enum VconvStatus vconv_run(struct VconvSession *session,
                           const char *op,
                           int32_t *out_verdict,
                           char **out_json);

/**
 * Message of the session's most recent failure, or null if none. The
 * pointer stays valid until the next failing call on the same session or
 * the session is freed; do not free it.
 */
const char *vconv_session_last_error(const struct VconvSession *session);

/**
 * Release a string returned through an `out_json` parameter. Null is a
 * no-op.
 */
void vconv_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VCONV_H */
