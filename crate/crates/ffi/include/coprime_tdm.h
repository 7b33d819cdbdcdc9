#ifndef COPRIME_TDM_H
#define COPRIME_TDM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum CtStatus {
  CT_STATUS_OK = 0,
  CT_STATUS_NULL_POINTER = 1,
  CT_STATUS_INVALID_PARAM = 2,
  CT_STATUS_NOT_COPRIME = 3,
  CT_STATUS_GRID_MISMATCH = 4,
  CT_STATUS_GRID_RESOLUTION = 5,
  CT_STATUS_LAG_OUT_OF_RANGE = 6,
  CT_STATUS_UNDEFINED_SPECTRUM = 7,
  CT_STATUS_SLOT_COLLISION = 8,
  CT_STATUS_TOO_FAST = 9,
  CT_STATUS_NO_FEASIBLE_SHIFT = 10,
  CT_STATUS_BUFFER_TOO_SMALL = 11,
  CT_STATUS_INTERNAL = 12,
} CtStatus;

/**
 * Acquisition layouts reachable through [`ct_pattern_combined`].
 */
typedef enum CtScheme {
  CT_SCHEME_NYQUIST_TDM = 0,
  CT_SCHEME_EXTENDED = 1,
  CT_SCHEME_EXTENDED_TDM2_SAMPLER = 2,
} CtScheme;

/**
 * Opaque sampling pattern.
 */
typedef struct CtPattern CtPattern;

/**
 * Opaque set of switch schedules, one per sampler.
 */
typedef struct CtSchedule CtSchedule;

/**
 * Opaque self weight function.
 */
typedef struct CtWeights CtWeights;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ct_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `cap`). Returns the full message length without the NUL, or 0
 * when the last call succeeded.
 */
size_t ct_last_error(char *buf, size_t cap);

/**
 * Releases a string returned by this library.
 */
void ct_string_free(char *s);

/**
 * Combined pattern (all samplers) of `signal` (1 or 2) under `scheme`.
 */
enum CtStatus ct_pattern_combined(uint64_t m,
                                  uint64_t n,
                                  enum CtScheme scheme,
                                  uint32_t signal,
                                  struct CtPattern **out);

/**
 * One sampler's branch (`sampler` 1 or 2) of an ExSCA signal over `span` ticks.
 * Offsets are ticks on a grid with subdivision `q`.
 */
enum CtStatus ct_pattern_exsca(uint64_t m,
                               uint64_t n,
                               uint64_t ex,
                               uint32_t q,
                               uint64_t s11,
                               uint64_t s12,
                               uint32_t signal,
                               uint32_t sampler,
                               uint64_t span,
                               struct CtPattern **out);

/**
 * Parses a pattern from its JSON form.
 */
enum CtStatus ct_pattern_from_json(const char *json, struct CtPattern **out);

/**
 * JSON form of a pattern; release with [`ct_string_free`]. Null on error.
 */
char *ct_pattern_to_json(const struct CtPattern *p);

size_t ct_pattern_len(const struct CtPattern *p);

uint32_t ct_pattern_q(const struct CtPattern *p);

uint64_t ct_pattern_span(const struct CtPattern *p);

/**
 * Copies the instants into `buf`. `out_len` always receives the required length.
 */
enum CtStatus ct_pattern_instants(const struct CtPattern *p,
                                  uint64_t *buf,
                                  size_t cap,
                                  size_t *out_len);

/**
 * Copies the 0/1 occupancy vector (length `span`) into `buf`.
 */
enum CtStatus ct_pattern_indicator(const struct CtPattern *p,
                                   uint8_t *buf,
                                   size_t cap,
                                   size_t *out_len);

void ct_pattern_free(struct CtPattern *p);

/**
 * Brute-force self weight function for lags `0..=lag_max`.
 */
enum CtStatus ct_weights_brute_force(const struct CtPattern *p,
                                     uint64_t lag_max,
                                     struct CtWeights **out);

/**
 * Weight at a signed lag; 0 outside the stored range or for a null handle.
 */
uint64_t ct_weights_at(const struct CtWeights *w, int64_t lag);

uint64_t ct_weights_lag_max(const struct CtWeights *w);

/**
 * Sum over the symmetric lag range.
 */
uint64_t ct_weights_total(const struct CtWeights *w);

/**
 * Bias window on `num_freqs` uniform bins of `[0, 2 pi)`, written to `buf`.
 */
enum CtStatus ct_weights_bias_window(const struct CtWeights *w,
                                     size_t num_freqs,
                                     double *buf,
                                     size_t cap);

void ct_weights_free(struct CtWeights *w);

/**
 * Closed-form second-signal weight at lag `lag` (units of `d`).
 */
enum CtStatus ct_closed_form_z2(uint64_t m, uint64_t n, int64_t lag, int64_t *out);

/**
 * Number of instants sampled by both ExSCA samplers, per signal, within `span` ticks.
 */
enum CtStatus ct_exsca_overlap(uint64_t m,
                               uint64_t n,
                               uint64_t ex,
                               uint32_t q,
                               uint64_t s11,
                               uint64_t s12,
                               uint64_t span,
                               size_t *out_signal1,
                               size_t *out_signal2);

/**
 * Builds switch schedules for `count` patterns grouped by sampler id.
 */
enum CtStatus ct_schedule_build(const struct CtPattern *const *patterns,
                                size_t count,
                                uint64_t hold_ticks,
                                struct CtSchedule **out);

/**
 * Number of switches (samplers) in the schedule set.
 */
size_t ct_schedule_switch_count(const struct CtSchedule *s);

/**
 * JSON form of the schedule set; release with [`ct_string_free`].
 */
char *ct_schedule_to_json(const struct CtSchedule *s);

void ct_schedule_free(struct CtSchedule *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COPRIME_TDM_H */
