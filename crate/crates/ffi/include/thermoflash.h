/* C interface to the thermoflash library. */

#ifndef THERMOFLASH_H
#define THERMOFLASH_H

/* Generated by cbindgen from crates/ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes returned by every fallible call.
 */
typedef enum tf_status {
  TF_OK = 0,
  TF_ERR_INVALID_ARGUMENT = 1,
  TF_ERR_COMPUTATION = 2,
  TF_ERR_PANIC = 3,
} tf_status;

/*
 Which variable a K-value sensitivity is taken against.
 */
typedef enum tf_k_derivative {
  TF_KD_TEMPERATURE = 0,
  TF_KD_PRESSURE = 1,
} tf_k_derivative;

/*
 Opaque component-set handle.
 */
typedef struct tf_component_set tf_component_set;

/*
 Opaque flash-result handle.
 */
typedef struct tf_flash_result tf_flash_result;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copy the message of the most recent error on this thread into `buf`
 (NUL-terminated, truncated to `len`). Returns the full message length in
 bytes, excluding the terminator.

 # Safety
 `buf` must point to `len` writable bytes, or be null to query the length.
 */
size_t tf_last_error_message(char *buf, size_t len);

/*
 The four-species set shipped with the library. Never fails.
 */
struct tf_component_set *tf_component_set_bundled(void);

/*
 Load a component data file. On success writes the new handle to `out`.

 # Safety
 `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum tf_status tf_component_set_load(const char *path, struct tf_component_set **out);

/*
 Number of species in the set.

 # Safety
 `set` must be a live handle from this library.
 */
size_t tf_component_set_len(const struct tf_component_set *set);

/*
 Copy the name of species `index` into `buf` (NUL-terminated, truncated).
 Returns the full name length, or 0 for an invalid index.

 # Safety
 `set` must be a live handle; `buf` must point to `len` writable bytes.
 */
size_t tf_component_set_name(const struct tf_component_set *set,
                             size_t index,
                             char *buf,
                             size_t len);

/*
 # Safety
 `set` must come from a constructor of this library and not be freed twice.
 */
void tf_component_set_free(struct tf_component_set *set);

/*
 Isothermal flash at (T, P). A non-converged solve still produces a result
 handle; check `tf_result_converged`.

 # Safety
 `set` must be live, `feed` must point to `n` doubles, `out` must be valid.
 */
enum tf_status tf_flash_pt(const struct tf_component_set *set,
                           const double *feed,
                           size_t n,
                           double temperature_k,
                           double pressure_pa,
                           double fd_step,
                           struct tf_flash_result **out);

/*
 Fixed vapor-fraction flash: solves for temperature.

 # Safety
 Same contract as [`tf_flash_pt`].
 */
enum tf_status tf_flash_pv(const struct tf_component_set *set,
                           const double *feed,
                           size_t n,
                           double vapor_fraction,
                           double pressure_pa,
                           double fd_step,
                           struct tf_flash_result **out);

/*
 Fixed-enthalpy flash: solves for the temperature at which the stream
 enthalpy equals `h_total_j_per_mol`.

 # Safety
 Same contract as [`tf_flash_pt`].
 */
enum tf_status tf_flash_ph(const struct tf_component_set *set,
                           const double *feed,
                           size_t n,
                           double h_total_j_per_mol,
                           double pressure_pa,
                           double fd_step,
                           struct tf_flash_result **out);

/*
 Stream enthalpy of a feed flashed at (T, P), J/mol. Useful for building
 PH targets from feed conditions plus a duty.

 # Safety
 `set` and `feed` as in [`tf_flash_pt`]; `out` must point to a double.
 */
enum tf_status tf_feed_enthalpy(const struct tf_component_set *set,
                                const double *feed,
                                size_t n,
                                double temperature_k,
                                double pressure_pa,
                                double *out);

/*
 Exact dK_i/d(wrt) at fixed phase compositions, via dual numbers.
 `x_liq` and `y_vap` are normalized compositions of length `n`; `out`
 receives `n` derivatives.

 # Safety
 All pointers must reference `n` readable (writable for `out`) doubles.
 */
enum tf_status tf_k_derivatives(const struct tf_component_set *set,
                                double temperature_k,
                                double pressure_pa,
                                const double *x_liq,
                                const double *y_vap,
                                size_t n,
                                enum tf_k_derivative wrt,
                                double *out);

/*
 1 when the solve converged, 0 when it was flagged.

 # Safety
 `result` must be a live handle from a flash call.
 */
int32_t tf_result_converged(const struct tf_flash_result *result);

/*
 Vapor fraction of the converged split.

 # Safety
 `result` must be a live handle from a flash call.
 */
double tf_result_vapor_fraction(const struct tf_flash_result *result);

/*
 Temperature of the result state, K.

 # Safety
 `result` must be a live handle from a flash call.
 */
double tf_result_temperature_k(const struct tf_flash_result *result);

/*
 Pressure of the result state, Pa.

 # Safety
 `result` must be a live handle from a flash call.
 */
double tf_result_pressure_pa(const struct tf_flash_result *result);

/*
 Number of components in the result vectors.

 # Safety
 `result` must be a live handle from a flash call.
 */
size_t tf_result_len(const struct tf_flash_result *result);

/*
 Outer (Newton / substitution) iteration count.

 # Safety
 `result` must be a live handle from a flash call.
 */
size_t tf_result_outer_iterations(const struct tf_flash_result *result);

/*
 Accumulated inner iteration count.

 # Safety
 `result` must be a live handle from a flash call.
 */
size_t tf_result_inner_iterations(const struct tf_flash_result *result);

/*
 1 when the feed collapsed to a single phase and V was clamped.

 # Safety
 `result` must be a live handle from a flash call.
 */
int32_t tf_result_single_phase(const struct tf_flash_result *result);

/*
 Liquid mole fraction of component `index`; NaN for an invalid index.

 # Safety
 `result` must be a live handle from a flash call.
 */
double tf_result_x(const struct tf_flash_result *result, size_t index);

/*
 Vapor mole fraction of component `index`; NaN for an invalid index.

 # Safety
 `result` must be a live handle from a flash call.
 */
double tf_result_y(const struct tf_flash_result *result, size_t index);

/*
 Equilibrium constant of component `index`; NaN for an invalid index.

 # Safety
 `result` must be a live handle from a flash call.
 */
double tf_result_k(const struct tf_flash_result *result, size_t index);

/*
 # Safety
 `result` must come from a flash call and not be freed twice.
 */
void tf_flash_result_free(struct tf_flash_result *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THERMOFLASH_H */
