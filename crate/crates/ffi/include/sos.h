#ifndef SOS_H
#define SOS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SosMeasure {
  SOS_MEASURE_CONSTRAINED = 0,
  SOS_MEASURE_AUXILIARY = 1,
} SosMeasure;

typedef enum SosStatus {
  SOS_STATUS_OK = 0,
  SOS_STATUS_NULL_POINTER = 1,
  SOS_STATUS_INVALID_PARAM = 2,
  SOS_STATUS_LENGTH_MISMATCH = 3,
  SOS_STATUS_CATALOG = 4,
  SOS_STATUS_TOO_LARGE = 5,
  SOS_STATUS_PRECONDITION = 6,
  SOS_STATUS_IO = 7,
  SOS_STATUS_INTERNAL = 8,
  SOS_STATUS_PANIC = 9,
} SosStatus;

/*
 Opaque model handle.
 */
typedef struct SosModel SosModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Creates a model with `len` columns at inverse temperature `beta`. A
 bound `m` of 0 means no height bound, which only the auxiliary measure
 accepts. The catalog starts empty and the regions at `eps = 0.1`,
 `alpha = 0.2`.

 # Safety
 `out` must be a valid pointer to writable storage for one handle.
 */
enum SosStatus sos_model_new(size_t len,
                             uint32_t m,
                             double beta,
                             enum SosMeasure measure,
                             struct SosModel **out);

/*
 # Safety
 `model` must come from `sos_model_new` and not have been freed; null is
 ignored.
 */
void sos_model_free(struct SosModel *model);

/*
 Sets the exit region `A` (via `eps`) and the start region `B` (via `alpha`).

 # Safety
 `model` must be a live handle.
 */
enum SosStatus sos_model_set_region(struct SosModel *model, double eps, double alpha);

/*
 Loads a JSON potential catalog from `path`.

 # Safety
 `model` must be a live handle and `path` a NUL-terminated string.
 */
enum SosStatus sos_model_load_catalog(struct SosModel *model, const char *path);

/*
 Unnormalized log weight of a configuration; `-inf` outside the support.

 # Safety
 `model` must be a live handle, `heights` must point to `len` values and
 `out` to one writable double.
 */
enum SosStatus sos_log_weight(const struct SosModel *model,
                              const int32_t *heights_ptr,
                              size_t len,
                              double *out);

/*
 Rate of moving column `site` (1-based) by `direction` (+1 or -1).

 # Safety
 As for `sos_log_weight`.
 */
enum SosStatus sos_jump_rate(const struct SosModel *model,
                             const int32_t *heights_ptr,
                             size_t len,
                             size_t site,
                             int32_t direction,
                             double *out);

/*
 Spectral gap of the generator; `r` truncates the first gradient
 coordinate of the auxiliary measure and is ignored otherwise.

 # Safety
 `model` must be a live handle and `out` writable.
 */
enum SosStatus sos_spectral_gap(const struct SosModel *model, uint32_t r, double *out);

/*
 Runs the dynamics from `start` up to `horizon`; writes the final
 configuration to `end` (length `len`) and the number of jumps.

 # Safety
 `start` and `end` must each hold `len` values; `jumps` must be writable.
 */
enum SosStatus sos_simulate(const struct SosModel *model,
                            const int32_t *start,
                            size_t len,
                            double horizon,
                            uint64_t seed,
                            int32_t *end,
                            uint64_t *jumps);

/*
 First exit time from `A` starting at `start`, censored at `horizon`.

 # Safety
 `start` must hold `len` values; `time` and `censored` must be writable.
 */
enum SosStatus sos_exit_time(const struct SosModel *model,
                             const int32_t *start,
                             size_t len,
                             double horizon,
                             uint64_t seed,
                             double *time,
                             bool *censored);

/*
 Message of the last error on this thread, or null. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *sos_last_error(void);

/*
 NUL-terminated crate version.
 */
const char *sos_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOS_H */
