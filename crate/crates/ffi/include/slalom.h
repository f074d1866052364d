#ifndef SLALOM_H
#define SLALOM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Spendthrift strategies exposed to C.
 */
typedef enum SlalomSpendthrift {
  SLALOM_SPENDTHRIFT_MINIMAL = 0,
  /**
   * Thinning to the upper half of every split.
   */
  SLALOM_SPENDTHRIFT_THINNING_UPPER_HALF = 1,
} SlalomSpendthrift;

/**
 * Status codes shared by every function.
 */
typedef enum SlalomStatus {
  SLALOM_STATUS_OK = 0,
  SLALOM_STATUS_NULL_POINTER = 1,
  SLALOM_STATUS_INVALID_UTF8 = 2,
  SLALOM_STATUS_INVALID_INPUT = 3,
  SLALOM_STATUS_GUARD_EXCEEDED = 4,
  SLALOM_STATUS_BUDGET_EXCEEDED = 5,
  /**
   * A check ran and reported violations.
   */
  SLALOM_STATUS_CHECK_FAILED = 6,
  /**
   * A broken internal guarantee or a caught panic.
   */
  SLALOM_STATUS_INTERNAL = 7,
} SlalomStatus;

/**
 * Opaque handle to a product condition.
 */
typedef struct SlalomCondition SlalomCondition;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL after a
 * successful one. Owned by the library; valid until the next call.
 */
const char *slalom_last_error(void);

/**
 * Frees a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void slalom_string_free(char *s);

/**
 * Counting and grid bounds on the covering number of `∏ f` by `g`-slaloms.
 *
 * # Safety
 * `f` and `g` must point to `len` readable values; `lower` and `upper` must
 * be writable.
 */
enum SlalomStatus slalom_cover_bounds(const uint64_t *f,
                                      const uint64_t *g,
                                      size_t len,
                                      uint64_t *lower,
                                      uint64_t *upper);

/**
 * Exact covering number, searching families of size at most `budget`.
 * Returns `BudgetExceeded` when no family that small covers.
 *
 * # Safety
 * `f` and `g` must point to `len` readable values; `out` must be writable.
 */
enum SlalomStatus slalom_cover_number(const uint64_t *f,
                                      const uint64_t *g,
                                      size_t len,
                                      uint64_t budget,
                                      uint64_t *out);

/**
 * Parses a condition from JSON. The handle is freed with
 * [`slalom_condition_free`].
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum SlalomStatus slalom_condition_from_json(const char *json, struct SlalomCondition **out);

/**
 * # Safety
 * `c` must come from this library and not have been freed already.
 */
void slalom_condition_free(struct SlalomCondition *c);

/**
 * `Ok` if every tree is valid, `CheckFailed` with the violations in the
 * last error otherwise.
 *
 * # Safety
 * `c` must be a live handle.
 */
enum SlalomStatus slalom_condition_validate(const struct SlalomCondition *c);

/**
 * # Safety
 * `c` must be a live handle; `out` must be writable.
 */
enum SlalomStatus slalom_condition_is_normal_form(const struct SlalomCondition *c, bool *out);

/**
 * A new handle holding the normal form of `c`.
 *
 * # Safety
 * `c` must be a live handle; `out` must be writable.
 */
enum SlalomStatus slalom_condition_normalize(const struct SlalomCondition *c,
                                             struct SlalomCondition **out);

/**
 * # Safety
 * `c` must be a live handle; `out` must be writable.
 */
enum SlalomStatus slalom_condition_to_json(const struct SlalomCondition *c, char **out);

/**
 * Plays `rounds` rounds of the fusion game from `c` with the bookkeeping
 * accountant and writes the transcript as JSON.
 *
 * # Safety
 * `c` must be a live handle; `out` must be writable.
 */
enum SlalomStatus slalom_game_play(const struct SlalomCondition *c,
                                   size_t rounds,
                                   enum SlalomSpendthrift spendthrift,
                                   char **out);

/**
 * Extracts per-level slalom sets for the name `name_json` on `c`.
 * `xi_json` is `{"f": [..], "g": [..], "h": [..]}` and `a_json` a JSON
 * array of coordinate ids read fiberwise. The extraction is written as JSON.
 *
 * # Safety
 * `c` must be a live handle, the strings NUL-terminated and `out` writable.
 */
enum SlalomStatus slalom_extract(const struct SlalomCondition *c,
                                 const char *name_json,
                                 const char *xi_json,
                                 const char *a_json,
                                 char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLALOM_H */
