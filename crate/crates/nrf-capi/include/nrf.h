/* C interface to the nrf reconstruction library. */

#ifndef NRF_H
#define NRF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Call outcome. Anything but `Ok` leaves a message retrievable through
 * `nrf_last_error_message`.
 */
typedef enum NrfStatus {
  NRF_STATUS_OK = 0,
  /**
   * Bad arguments, domain violations, malformed formats.
   */
  NRF_STATUS_INVALID_ARGUMENT = 1,
  /**
   * File system failure.
   */
  NRF_STATUS_IO = 2,
  /**
   * Training produced a non-finite loss.
   */
  NRF_STATUS_DIVERGED = 3,
  /**
   * A required pointer was null.
   */
  NRF_STATUS_NULL_POINTER = 4,
  /**
   * Internal panic caught at the boundary.
   */
  NRF_STATUS_INTERNAL = 5,
} NrfStatus;

/**
 * Real or complex image on a square pixel grid.
 */
typedef struct NrfImage NrfImage;

/**
 * Radially sampled measurement set.
 */
typedef struct NrfKspace NrfKspace;

/**
 * Analytic ellipse phantom.
 */
typedef struct NrfPhantom NrfPhantom;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message (UTF-8, NUL-terminated when it fits) into
 * `buf` and returns the full message length in bytes. A zero return means
 * no error has been recorded on this thread.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes, or be null (then only the
 * length is returned).
 */
size_t nrf_last_error_message(char *buf, size_t cap);

/**
 * Builds a builtin phantom (`"shepp-logan"` or `"simple"`) scaled to the
 * square `[-extent/2, extent/2]^2`.
 *
 * # Safety
 * `name` must be a NUL-terminated UTF-8 string; `out` must be writable.
 */
enum NrfStatus nrf_phantom_builtin(const char *name, double extent, struct NrfPhantom **out);

/**
 * Loads a phantom from the text format (`cx cy a b angle density` rows).
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
 */
enum NrfStatus nrf_phantom_load(const char *path, double extent, struct NrfPhantom **out);

/**
 * # Safety
 * `p` must come from a phantom constructor and not already be freed.
 */
void nrf_phantom_free(struct NrfPhantom *p);

/**
 * Simulates a radial acquisition of the phantom on an `n`-pixel grid:
 * `scheme` is one of uniform|limited|random|stratified|golden.
 *
 * # Safety
 * `phantom` must be a live handle; `scheme` a NUL-terminated string;
 * `out` writable.
 */
enum NrfStatus nrf_simulate(const struct NrfPhantom *phantom,
                            size_t n,
                            const char *scheme,
                            double r_factor,
                            uint64_t seed,
                            double noise_sigma,
                            struct NrfKspace **out);

/**
 * # Safety
 * `path` must be NUL-terminated UTF-8; `k` a live handle.
 */
enum NrfStatus nrf_kspace_save(const struct NrfKspace *k, const char *path);

/**
 * # Safety
 * `path` must be NUL-terminated UTF-8; `out` writable.
 */
enum NrfStatus nrf_kspace_load(const char *path, struct NrfKspace **out);

/**
 * # Safety
 * `k` must come from a k-space constructor and not already be freed.
 */
void nrf_kspace_free(struct NrfKspace *k);

/**
 * Number of spokes in a measurement set.
 *
 * # Safety
 * `k` must be a live handle.
 */
size_t nrf_kspace_spokes(const struct NrfKspace *k);

/**
 * Trains the coordinate field against the measurement's projections and
 * returns the magnitude image. `steps`, `lr` and `pe_l` of 0 select the
 * defaults (500, 5e-4, 20).
 *
 * # Safety
 * `k` must be a live handle; `out` writable.
 */
enum NrfStatus nrf_reconstruct(const struct NrfKspace *k,
                               size_t steps,
                               double lr,
                               size_t pe_l,
                               uint64_t seed,
                               size_t n_out,
                               struct NrfImage **out);

/**
 * Zero-filled adjoint reconstruction; `ramp != 0` applies radial density
 * compensation.
 *
 * # Safety
 * `k` must be a live handle; `out` writable.
 */
enum NrfStatus nrf_adjoint(const struct NrfKspace *k,
                           int32_t ramp,
                           size_t n_out,
                           struct NrfImage **out);

/**
 * Rasterizes the phantom to a reference image.
 *
 * # Safety
 * `phantom` must be a live handle; `out` writable.
 */
enum NrfStatus nrf_rasterize(const struct NrfPhantom *phantom, size_t n, struct NrfImage **out);

/**
 * Pixels per side.
 *
 * # Safety
 * `img` must be a live handle.
 */
size_t nrf_image_size(const struct NrfImage *img);

/**
 * Physical side length.
 *
 * # Safety
 * `img` must be a live handle.
 */
double nrf_image_extent(const struct NrfImage *img);

/**
 * Copies the row-major magnitude values into `buf` (length `cap`); the
 * image has `n*n` values.
 *
 * # Safety
 * `img` must be live; `buf` must point to `cap` writable doubles.
 */
enum NrfStatus nrf_image_magnitudes(const struct NrfImage *img, double *buf, size_t cap);

/**
 * # Safety
 * `img` must be live; `path` NUL-terminated UTF-8.
 */
enum NrfStatus nrf_image_save(const struct NrfImage *img, const char *path);

/**
 * # Safety
 * `path` must be NUL-terminated UTF-8; `out` writable.
 */
enum NrfStatus nrf_image_load(const char *path, struct NrfImage **out);

/**
 * # Safety
 * `img` must come from an image constructor and not already be freed.
 */
void nrf_image_free(struct NrfImage *img);

/**
 * Whole-image SSIM of `x` against reference `y`.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum NrfStatus nrf_ssim(const struct NrfImage *x, const struct NrfImage *y, double *out);

/**
 * PSNR in dB of `x` against reference `y`; `literal != 0` uses the summed
 * squared error in place of the mean.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum NrfStatus nrf_psnr(const struct NrfImage *x,
                        const struct NrfImage *y,
                        int32_t literal,
                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NRF_H */
