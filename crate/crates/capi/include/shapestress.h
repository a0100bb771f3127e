#ifndef SHAPESTRESS_H
#define SHAPESTRESS_H

/* Generated from the shapestress-capi crate by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code of every fallible call. Zero means success; everything
// else is an error and leaves the outputs untouched.
typedef enum {
  // The call succeeded.
  SS_STATUS_OK = 0,
  // A required pointer argument was null.
  SS_STATUS_NULL_ARGUMENT = 1,
  // An argument value is outside the supported range.
  SS_STATUS_INVALID_ARGUMENT = 2,
  // A referenced file does not exist.
  SS_STATUS_NOT_FOUND = 3,
  // Malformed input (header, manifest, or number formats).
  SS_STATUS_SCHEMA = 4,
  // Duplicate observations for the same key.
  SS_STATUS_DUPLICATE = 5,
  // Panel data is structurally incomplete.
  SS_STATUS_INCOMPLETE = 6,
  // Numerically or structurally invalid data (non-finite entries,
  // degenerate configurations, mismatched dimensions).
  SS_STATUS_DATA = 7,
  // Landmark geometry unusable (collinear or duplicated landmarks).
  SS_STATUS_LANDMARKS = 8,
  // Trimming removed too much of the sample.
  SS_STATUS_SURVIVORS = 9,
  // An operating-system I/O failure.
  SS_STATUS_IO = 10,
  // An internal invariant failed; report this as a bug.
  SS_STATUS_INTERNAL = 11,
} SsStatus;

// A landmark configuration (k landmarks in m coordinates).
typedef struct SsConfig SsConfig;

// A converged mean-shape estimate together with its diagnostics.
typedef struct SsMeanShape SsMeanShape;

// A fitted planar thin-plate-spline deformation.
typedef struct SsTps SsTps;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Returns the library version as a static NUL-terminated string.
const char *ss_version(void);

// Copies the calling thread's last error message into `buffer` (always
// NUL-terminated, truncated to `capacity`) and returns the full message
// length in bytes excluding the terminator. `buffer` may be null when
// `capacity` is zero, which just queries the length.
//
// # Safety
// `buffer` must point to at least `capacity` writable bytes, or be null
// with `capacity == 0`.
size_t ss_last_error_message(char *buffer, size_t capacity);

// Builds a configuration from a row-major `landmarks x dim` buffer.
// On success writes a handle to `out`; release it with
// [`ss_config_free`].
//
// # Safety
// `data` must point to `landmarks * dim` readable doubles and `out` to a
// writable pointer slot.
SsStatus ss_config_new(const double *data, size_t landmarks, size_t dim, SsConfig **out);

// Releases a configuration handle. Accepts null.
//
// # Safety
// `config` must be a handle from this library that has not been freed.
void ss_config_free(SsConfig *config);

// Number of landmarks, or 0 for a null handle.
//
// # Safety
// `config` must be a live handle or null.
size_t ss_config_landmarks(const SsConfig *config);

// Coordinate dimension, or 0 for a null handle.
//
// # Safety
// `config` must be a live handle or null.
size_t ss_config_dim(const SsConfig *config);

// Copies the configuration into a row-major `landmarks x dim` buffer.
//
// # Safety
// `config` must be a live handle; `out` must point to
// `landmarks * dim` writable doubles.
SsStatus ss_config_data(const SsConfig *config, double *out);

// Writes the centroid size (Frobenius norm of the centered configuration)
// to `out`.
//
// # Safety
// `config` must be a live handle; `out` must be writable.
SsStatus ss_centroid_size(const SsConfig *config, double *out);

// Registers `source` onto `target` over translation, orthogonal maps, and
// (optionally) scale. Writes the `dim x dim` row-major orthogonal factor
// to `rotation`, the translation to `translation` (`dim` entries), and
// the scale and residual to their slots; each output pointer may be null
// to skip it.
//
// # Safety
// `source` and `target` must be live handles of equal dimensions;
// non-null outputs must point to buffers of the sizes above.
SsStatus ss_align(const SsConfig *source,
                  const SsConfig *target,
                  bool with_scale,
                  double *rotation,
                  double *translation,
                  double *scale,
                  double *residual);

// Writes the full Procrustes distance between the shapes of `a` and `b`
// to `out`.
//
// # Safety
// `a` and `b` must be live handles; `out` must be writable.
SsStatus ss_procrustes_distance(const SsConfig *a, const SsConfig *b, double *out);

// Estimates the mean shape of `count` configurations. Pass `tol <= 0`
// and/or `max_iter == 0` to use the defaults (1e-10, 100). On success
// writes a handle to `out`; release it with [`ss_mean_shape_free`].
//
// # Safety
// `configs` must point to `count` live configuration handles; `out`
// must be a writable pointer slot.
SsStatus ss_gpa_mean(const SsConfig *const *configs,
                     size_t count,
                     double tol,
                     size_t max_iter,
                     SsMeanShape **out);

// Releases a mean-shape handle. Accepts null.
//
// # Safety
// `mean` must be a handle from this library that has not been freed.
void ss_mean_shape_free(SsMeanShape *mean);

// Shape variability (root mean squared aligned residual), or NaN for a
// null handle.
//
// # Safety
// `mean` must be a live handle or null.
double ss_mean_shape_svar(const SsMeanShape *mean);

// Final value of the registration objective, or NaN for a null handle.
//
// # Safety
// `mean` must be a live handle or null.
double ss_mean_shape_objective(const SsMeanShape *mean);

// Number of alignment sweeps performed, or 0 for a null handle.
//
// # Safety
// `mean` must be a live handle or null.
size_t ss_mean_shape_iterations(const SsMeanShape *mean);

// Whether the iteration reached its tolerance before the cap.
//
// # Safety
// `mean` must be a live handle or null.
bool ss_mean_shape_converged(const SsMeanShape *mean);

// Copies the mean configuration into a fresh handle written to `out`;
// release it with [`ss_config_free`].
//
// # Safety
// `mean` must be a live handle; `out` must be a writable pointer slot.
SsStatus ss_mean_shape_config(const SsMeanShape *mean, SsConfig **out);

// Fits the thin-plate spline carrying each source landmark exactly onto
// the corresponding target landmark (both planar, at least 4 landmarks).
// On success writes a handle to `out`; release it with [`ss_tps_free`].
//
// # Safety
// `source` and `target` must be live handles; `out` must be a writable
// pointer slot.
SsStatus ss_tps_fit(const SsConfig *source, const SsConfig *target, SsTps **out);

// Releases a deformation handle. Accepts null.
//
// # Safety
// `tps` must be a handle from this library that has not been freed.
void ss_tps_free(SsTps *tps);

// Bending energy of the fitted deformation, or NaN for a null handle.
//
// # Safety
// `tps` must be a live handle or null.
double ss_tps_bending_energy(const SsTps *tps);

// Evaluates the deformation at `(x, y)` and writes the image to
// `out_x`/`out_y`.
//
// # Safety
// `tps` must be a live handle; `out_x` and `out_y` must be writable.
SsStatus ss_tps_evaluate(const SsTps *tps, double x, double y, double *out_x, double *out_y);

// Modified band depth of each of `curves` curves sampled on a shared
// index grid of `grid_len` points. `values` is row-major
// `curves x grid_len`; `out` receives `curves` depths.
//
// # Safety
// `values` must point to `curves * grid_len` readable doubles and `out`
// to `curves` writable doubles.
SsStatus ss_band_depths(const double *values, size_t curves, size_t grid_len, double *out);

// Projection depth of each of `count` points (row-major `count x dim`)
// with respect to the whole sample, using the canonical axes plus
// `directions` seeded pseudo-random unit vectors. `out` receives `count`
// depths. The same `directions` and `seed` always give the same result.
//
// # Safety
// `points` must point to `count * dim` readable doubles and `out` to
// `count` writable doubles.
SsStatus ss_projection_depths(const double *points,
                              size_t count,
                              size_t dim,
                              size_t directions,
                              uint64_t seed,
                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHAPESTRESS_H */
