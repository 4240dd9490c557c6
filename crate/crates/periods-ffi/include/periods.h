/* C interface to the periods engine. Generated by cbindgen; do not edit. */

#ifndef PERIODS_H
#define PERIODS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Three-valued answer of the decision and construction entry points.
enum PeriodsOutcome
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  // The character is realizable in the stratum (and, for
  // [`periods_realize`], a certificate was produced).
  PERIODS_OUTCOME_REALIZABLE = 0,
  // The character is provably not realizable in the stratum.
  PERIODS_OUTCOME_NOT_REALIZABLE = 1,
  // Construction only: the packing heuristic ran out of retries. Not a
  // verdict; the character is still realizable.
  PERIODS_OUTCOME_EXHAUSTED = 2,
};
#ifndef __cplusplus
typedef int32_t PeriodsOutcome;
#endif // __cplusplus

// Result of a library call.
enum PeriodsStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  // The call succeeded and all out-pointers were written.
  PERIODS_STATUS_OK = 0,
  // A required pointer argument was null.
  PERIODS_STATUS_NULL_ARGUMENT = 1,
  // A text argument was not valid UTF-8.
  PERIODS_STATUS_INVALID_UTF8 = 2,
  // A document or literal failed to parse.
  PERIODS_STATUS_PARSE_ERROR = 3,
  // Structurally valid input outside the library's domain (for example a
  // partition whose genus does not match the character).
  PERIODS_STATUS_DOMAIN_ERROR = 4,
  // An internal invariant failed; the message names it.
  PERIODS_STATUS_INTERNAL_ERROR = 5,
};
#ifndef __cplusplus
typedef int32_t PeriodsStatus;
#endif // __cplusplus

// Opaque handle to a realization certificate.
typedef struct PeriodsCert PeriodsCert;

// Opaque handle to a parsed period character.
typedef struct PeriodsChi PeriodsChi;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Returns the library version as a static string. Never fails; do not free.
const char *periods_version(void);

// Returns the message for the most recent failing call on this thread, or
// an empty string if the most recent call succeeded.
//
// The pointer is borrowed: valid until the next library call on the same
// thread, and must not be freed.
const char *periods_last_error(void);

// Releases a string returned through a `char**` out-pointer. Null is a
// no-op.
//
// # Safety
// `s` must be null or a pointer obtained from this library and not yet
// freed.
void periods_string_free(char *s);

// Parses a period character document (the `genus ... d ...` text format)
// into a fresh handle.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
PeriodsStatus periods_chi_parse(const char *text, struct PeriodsChi **out);

// Returns the genus of the character, or 0 if the handle is null.
//
// # Safety
// `chi` must be null or a live handle from [`periods_chi_parse`].
uint32_t periods_chi_genus(const struct PeriodsChi *chi);

// Releases a character handle. Null is a no-op.
//
// # Safety
// `chi` must be null or a live handle from [`periods_chi_parse`], and must
// not be used afterwards.
void periods_chi_free(struct PeriodsChi *chi);

// Decides realizability of the character in the stratum given by
// `partition` (text form, e.g. `"1,3"`). Writes `Realizable` or
// `NotRealizable` to `out_outcome`; on `NotRealizable`, if `out_reason` is
// non-null it receives the reason as a caller-owned string (null on the
// positive verdict).
//
// # Safety
// `chi` must be a live handle; `partition` a NUL-terminated string;
// `out_outcome` a valid pointer; `out_reason` null or a valid pointer.
PeriodsStatus periods_decide(const struct PeriodsChi *chi,
                             const char *partition,
                             PeriodsOutcome *out_outcome,
                             char **out_reason);

// Decides and, on the positive verdict, constructs a certificate.
//
// `seed` drives the packing heuristic (matching seeds give identical
// certificates); `max_steps` bounds each normalization run, with 0 meaning
// the default budget. On `Realizable` a fresh certificate handle is written
// to `out_cert`; on the other outcomes `out_cert` is set to null.
// `Exhausted` means the packing retries ran out, not that the character is
// unrealizable.
//
// # Safety
// `chi` must be a live handle; `partition` a NUL-terminated string;
// `out_outcome` and `out_cert` valid pointers.
PeriodsStatus periods_realize(const struct PeriodsChi *chi,
                              const char *partition,
                              uint64_t seed,
                              uint32_t max_steps,
                              PeriodsOutcome *out_outcome,
                              struct PeriodsCert **out_cert);

// Parses a certificate document (the `CERT 1` text format) into a fresh
// handle. Parsing re-validates every structural invariant; tampered
// documents are rejected here.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
PeriodsStatus periods_cert_parse(const char *text, struct PeriodsCert **out);

// Serializes a certificate to its text format as a caller-owned string.
//
// # Safety
// `cert` must be a live handle and `out` a valid pointer.
PeriodsStatus periods_cert_to_text(const struct PeriodsCert *cert, char **out);

// Runs the full verification suite on a certificate. `out_valid` receives
// the verdict; if `out_report` is non-null it receives the per-check report
// as a caller-owned string.
//
// A failing check is a property of the certificate, not of the call: the
// status is `Ok` whenever the suite ran.
//
// # Safety
// `cert` must be a live handle; `out_valid` a valid pointer; `out_report`
// null or a valid pointer.
PeriodsStatus periods_cert_verify(const struct PeriodsCert *cert,
                                  bool *out_valid,
                                  char **out_report);

// Releases a certificate handle. Null is a no-op.
//
// # Safety
// `cert` must be null or a live handle, and must not be used afterwards.
void periods_cert_free(struct PeriodsCert *cert);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* PERIODS_H */
