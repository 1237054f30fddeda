#ifndef PLANREC_H
#define PLANREC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PlanrecStatus {
  PLANREC_STATUS_OK = 0,
  PLANREC_STATUS_NULL_ARGUMENT = 1,
  PLANREC_STATUS_INVALID_UTF8 = 2,
  PLANREC_STATUS_IO = 3,
  PLANREC_STATUS_PARSE = 4,
  PLANREC_STATUS_VALIDATION = 5,
  PLANREC_STATUS_NO_INTERPRETATION = 6,
  PLANREC_STATUS_EMPTY_SET = 7,
  PLANREC_STATUS_PANIC = 8,
} PlanrecStatus;

// A loaded, validated knowledge base.
typedef struct PlanrecKb PlanrecKb;

// One dialogue against a knowledge base.
typedef struct PlanrecSession PlanrecSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Load and validate a knowledge base file. On success `*out` receives a
// handle to free with `planrec_kb_free`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum PlanrecStatus planrec_kb_load(const char *path, struct PlanrecKb **out);

// Parse and validate a knowledge base from JSON text.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum PlanrecStatus planrec_kb_from_json(const char *json, struct PlanrecKb **out);

// # Safety
// `kb` must come from this library and not be freed twice. Null is ignored.
void planrec_kb_free(struct PlanrecKb *kb);

// Start a session with the thresholds and ICNORM mode from the KB config.
//
// # Safety
// `kb` must be a live handle and `out` a writable pointer.
enum PlanrecStatus planrec_session_new(const struct PlanrecKb *kb, struct PlanrecSession **out);

// Feed one transcript record (a single JSON line). A header record or a
// blank line is accepted and ignored. On `NO_INTERPRETATION` or
// `EMPTY_SET` the session is unchanged.
//
// # Safety
// `session` must be a live handle and `record_json` a NUL-terminated string.
enum PlanrecStatus planrec_session_process(struct PlanrecSession *session, const char *record_json);

// Number of live interpretations; 0 for a null handle.
//
// # Safety
// `session` must be null or a live handle.
size_t planrec_session_live_count(const struct PlanrecSession *session);

// Run indirect inference and ranking, writing the result document (the
// same JSON `planrec interpret` prints) to `*out_json`. The live set is
// not consumed. Returns `EMPTY_SET` if nothing survives; the document is
// still written.
//
// # Safety
// `session` must be a live handle and `out_json` a writable pointer.
enum PlanrecStatus planrec_session_finalize(const struct PlanrecSession *session, char **out_json);

// Forget the dialogue so far.
//
// # Safety
// `session` must be null or a live handle.
enum PlanrecStatus planrec_session_reset(struct PlanrecSession *session);

// # Safety
// `session` must come from this library and not be freed twice.
void planrec_session_free(struct PlanrecSession *session);

// # Safety
// `s` must be a string returned by this library, or null.
void planrec_string_free(char *s);

// Message for the last failed call on this thread, or null. Valid until
// the next call into the library from the same thread.
const char *planrec_last_error(void);

// Library version, statically allocated.
const char *planrec_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLANREC_H */
