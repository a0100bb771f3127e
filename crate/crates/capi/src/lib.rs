//! C ABI over the shape-analytics core: opaque handles, integer status
//! codes, and flat `f64` buffers, so the library can be driven from C or
//! any language with a C FFI.
//!
//! Conventions:
//! - Every fallible call returns [`SsStatus`]; `SS_STATUS_OK` is zero.
//! - Outputs are written through caller-supplied pointers only on success.
//! - Handles (`SsConfig`, `SsMeanShape`, `SsTps`) are created by `_new`/
//!   `_fit` calls and must be released with the matching `_free`; `_free`
//!   accepts null.
//! - Matrix buffers are row-major.
//! - After a non-OK status, [`ss_last_error_message`] returns a
//!   human-readable description for the calling thread.
//!
//! The committed header `include/shapestress.h` is regenerated from this
//! file by the build script.

use std::cell::RefCell;
use std::ffi::CString;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use nalgebra::DMatrix;
use shapestress::depth;
use shapestress::error::{Error, ErrorClass};
use shapestress::procrustes::{self, GpaOptions, MeanShapeResult};
use shapestress::shape::{self, ConfigurationMatrix};
use shapestress::tps::{self, TpsDeformation};

/// Status code of every fallible call. Zero means success; everything
/// else is an error and leaves the outputs untouched.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument value is outside the supported range.
    InvalidArgument = 2,
    /// A referenced file does not exist.
    NotFound = 3,
    /// Malformed input (header, manifest, or number formats).
    Schema = 4,
    /// Duplicate observations for the same key.
    Duplicate = 5,
    /// Panel data is structurally incomplete.
    Incomplete = 6,
    /// Numerically or structurally invalid data (non-finite entries,
    /// degenerate configurations, mismatched dimensions).
    Data = 7,
    /// Landmark geometry unusable (collinear or duplicated landmarks).
    Landmarks = 8,
    /// Trimming removed too much of the sample.
    Survivors = 9,
    /// An operating-system I/O failure.
    Io = 10,
    /// An internal invariant failed; report this as a bug.
    Internal = 11,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized: String = message.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(err: &Error) -> SsStatus {
    set_error(&err.to_string());
    match err.class() {
        ErrorClass::Usage => SsStatus::InvalidArgument,
        ErrorClass::NotFound => SsStatus::NotFound,
        ErrorClass::Schema => SsStatus::Schema,
        ErrorClass::Duplicate => SsStatus::Duplicate,
        ErrorClass::Incomplete => SsStatus::Incomplete,
        ErrorClass::Data => SsStatus::Data,
        ErrorClass::Landmarks => SsStatus::Landmarks,
        ErrorClass::Survivors => SsStatus::Survivors,
        ErrorClass::Io => SsStatus::Io,
    }
}

fn null_argument(what: &str) -> SsStatus {
    set_error(&format!("{what} must not be null"));
    SsStatus::NullArgument
}

/// Runs a fallible body, converting panics into `Internal` instead of
/// unwinding across the FFI boundary.
fn guarded(body: impl FnOnce() -> SsStatus) -> SsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic; please report");
            SsStatus::Internal
        }
    }
}

/// A landmark configuration (k landmarks in m coordinates).
pub struct SsConfig(ConfigurationMatrix);

/// A converged mean-shape estimate together with its diagnostics.
pub struct SsMeanShape(MeanShapeResult);

/// A fitted planar thin-plate-spline deformation.
pub struct SsTps(TpsDeformation);

/// Returns the library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ss_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the calling thread's last error message into `buffer` (always
/// NUL-terminated, truncated to `capacity`) and returns the full message
/// length in bytes excluding the terminator. `buffer` may be null when
/// `capacity` is zero, which just queries the length.
///
/// # Safety
/// `buffer` must point to at least `capacity` writable bytes, or be null
/// with `capacity == 0`.
#[no_mangle]
pub unsafe extern "C" fn ss_last_error_message(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buffer.is_null() && capacity > 0 {
            let copy = bytes.len().min(capacity - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buffer, copy);
            *buffer.add(copy) = 0;
        }
        bytes.len()
    })
}

/// Builds a configuration from a row-major `landmarks x dim` buffer.
/// On success writes a handle to `out`; release it with
/// [`ss_config_free`].
///
/// # Safety
/// `data` must point to `landmarks * dim` readable doubles and `out` to a
/// writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn ss_config_new(
    data: *const f64,
    landmarks: usize,
    dim: usize,
    out: *mut *mut SsConfig,
) -> SsStatus {
    guarded(|| {
        if out.is_null() {
            return null_argument("out");
        }
        if data.is_null() {
            return null_argument("data");
        }
        let len = match landmarks.checked_mul(dim) {
            Some(len) if len > 0 => len,
            _ => {
                set_error("landmarks * dim must be positive and not overflow");
                return SsStatus::InvalidArgument;
            }
        };
        let slice = std::slice::from_raw_parts(data, len);
        match ConfigurationMatrix::new(DMatrix::from_row_slice(landmarks, dim, slice)) {
            Ok(config) => {
                *out = Box::into_raw(Box::new(SsConfig(config)));
                SsStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Releases a configuration handle. Accepts null.
///
/// # Safety
/// `config` must be a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ss_config_free(config: *mut SsConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Number of landmarks, or 0 for a null handle.
///
/// # Safety
/// `config` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ss_config_landmarks(config: *const SsConfig) -> usize {
    config.as_ref().map_or(0, |c| c.0.landmarks())
}

/// Coordinate dimension, or 0 for a null handle.
///
/// # Safety
/// `config` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ss_config_dim(config: *const SsConfig) -> usize {
    config.as_ref().map_or(0, |c| c.0.dim())
}

/// Copies the configuration into a row-major `landmarks x dim` buffer.
///
/// # Safety
/// `config` must be a live handle; `out` must point to
/// `landmarks * dim` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ss_config_data(config: *const SsConfig, out: *mut f64) -> SsStatus {
    guarded(|| {
        let Some(config) = config.as_ref() else {
            return null_argument("config");
        };
        if out.is_null() {
            return null_argument("out");
        }
        let m = config.0.data();
        let mut cursor = out;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                *cursor = m[(i, j)];
                cursor = cursor.add(1);
            }
        }
        SsStatus::Ok
    })
}

/// Writes the centroid size (Frobenius norm of the centered configuration)
/// to `out`.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_centroid_size(config: *const SsConfig, out: *mut f64) -> SsStatus {
    guarded(|| {
        let Some(config) = config.as_ref() else {
            return null_argument("config");
        };
        if out.is_null() {
            return null_argument("out");
        }
        *out = shape::centroid_size(&config.0);
        SsStatus::Ok
    })
}

/// Registers `source` onto `target` over translation, orthogonal maps, and
/// (optionally) scale. Writes the `dim x dim` row-major orthogonal factor
/// to `rotation`, the translation to `translation` (`dim` entries), and
/// the scale and residual to their slots; each output pointer may be null
/// to skip it.
///
/// # Safety
/// `source` and `target` must be live handles of equal dimensions;
/// non-null outputs must point to buffers of the sizes above.
#[no_mangle]
pub unsafe extern "C" fn ss_align(
    source: *const SsConfig,
    target: *const SsConfig,
    with_scale: bool,
    rotation: *mut f64,
    translation: *mut f64,
    scale: *mut f64,
    residual: *mut f64,
) -> SsStatus {
    guarded(|| {
        let (Some(source), Some(target)) = (source.as_ref(), target.as_ref()) else {
            return null_argument("source/target");
        };
        match procrustes::align(&source.0, &target.0, with_scale) {
            Ok(fit) => {
                if !rotation.is_null() {
                    let mut cursor = rotation;
                    for i in 0..fit.rotation.nrows() {
                        for j in 0..fit.rotation.ncols() {
                            *cursor = fit.rotation[(i, j)];
                            cursor = cursor.add(1);
                        }
                    }
                }
                if !translation.is_null() {
                    for (offset, v) in fit.translation.iter().enumerate() {
                        *translation.add(offset) = *v;
                    }
                }
                if !scale.is_null() {
                    *scale = fit.scale;
                }
                if !residual.is_null() {
                    *residual = fit.residual;
                }
                SsStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Writes the full Procrustes distance between the shapes of `a` and `b`
/// to `out`.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_procrustes_distance(
    a: *const SsConfig,
    b: *const SsConfig,
    out: *mut f64,
) -> SsStatus {
    guarded(|| {
        let (Some(a), Some(b)) = (a.as_ref(), b.as_ref()) else {
            return null_argument("a/b");
        };
        if out.is_null() {
            return null_argument("out");
        }
        match procrustes::procrustes_distance(&a.0, &b.0) {
            Ok(d) => {
                *out = d;
                SsStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Estimates the mean shape of `count` configurations. Pass `tol <= 0`
/// and/or `max_iter == 0` to use the defaults (1e-10, 100). On success
/// writes a handle to `out`; release it with [`ss_mean_shape_free`].
///
/// # Safety
/// `configs` must point to `count` live configuration handles; `out`
/// must be a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn ss_gpa_mean(
    configs: *const *const SsConfig,
    count: usize,
    tol: f64,
    max_iter: usize,
    out: *mut *mut SsMeanShape,
) -> SsStatus {
    guarded(|| {
        if out.is_null() {
            return null_argument("out");
        }
        if configs.is_null() {
            return null_argument("configs");
        }
        let handles = std::slice::from_raw_parts(configs, count);
        let mut sample = Vec::with_capacity(count);
        for handle in handles {
            let Some(config) = handle.as_ref() else {
                return null_argument("configs[i]");
            };
            sample.push(config.0.clone());
        }
        let defaults = GpaOptions::default();
        let opts = GpaOptions {
            tol: if tol > 0.0 { tol } else { defaults.tol },
            max_iter: if max_iter > 0 { max_iter } else { defaults.max_iter },
        };
        match procrustes::gpa_mean(&sample, opts) {
            Ok(result) => {
                *out = Box::into_raw(Box::new(SsMeanShape(result)));
                SsStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Releases a mean-shape handle. Accepts null.
///
/// # Safety
/// `mean` must be a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ss_mean_shape_free(mean: *mut SsMeanShape) {
    if !mean.is_null() {
        drop(Box::from_raw(mean));
    }
}

/// Shape variability (root mean squared aligned residual), or NaN for a
/// null handle.
///
/// # Safety
/// `mean` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ss_mean_shape_svar(mean: *const SsMeanShape) -> f64 {
    mean.as_ref().map_or(f64::NAN, |m| m.0.svar)
}

/// Final value of the registration objective, or NaN for a null handle.
///
/// # Safety
/// `mean` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ss_mean_shape_objective(mean: *const SsMeanShape) -> f64 {
    mean.as_ref().map_or(f64::NAN, |m| m.0.objective)
}

/// Number of alignment sweeps performed, or 0 for a null handle.
///
/// # Safety
/// `mean` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ss_mean_shape_iterations(mean: *const SsMeanShape) -> usize {
    mean.as_ref().map_or(0, |m| m.0.iterations)
}

/// Whether the iteration reached its tolerance before the cap.
///
/// # Safety
/// `mean` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ss_mean_shape_converged(mean: *const SsMeanShape) -> bool {
    mean.as_ref().is_some_and(|m| m.0.converged)
}

/// Copies the mean configuration into a fresh handle written to `out`;
/// release it with [`ss_config_free`].
///
/// # Safety
/// `mean` must be a live handle; `out` must be a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn ss_mean_shape_config(
    mean: *const SsMeanShape,
    out: *mut *mut SsConfig,
) -> SsStatus {
    guarded(|| {
        let Some(mean) = mean.as_ref() else {
            return null_argument("mean");
        };
        if out.is_null() {
            return null_argument("out");
        }
        *out = Box::into_raw(Box::new(SsConfig(mean.0.mean.clone())));
        SsStatus::Ok
    })
}

/// Fits the thin-plate spline carrying each source landmark exactly onto
/// the corresponding target landmark (both planar, at least 4 landmarks).
/// On success writes a handle to `out`; release it with [`ss_tps_free`].
///
/// # Safety
/// `source` and `target` must be live handles; `out` must be a writable
/// pointer slot.
#[no_mangle]
pub unsafe extern "C" fn ss_tps_fit(
    source: *const SsConfig,
    target: *const SsConfig,
    out: *mut *mut SsTps,
) -> SsStatus {
    guarded(|| {
        let (Some(source), Some(target)) = (source.as_ref(), target.as_ref()) else {
            return null_argument("source/target");
        };
        if out.is_null() {
            return null_argument("out");
        }
        match tps::fit(&source.0, &target.0) {
            Ok(fit) => {
                *out = Box::into_raw(Box::new(SsTps(fit)));
                SsStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Releases a deformation handle. Accepts null.
///
/// # Safety
/// `tps` must be a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ss_tps_free(tps: *mut SsTps) {
    if !tps.is_null() {
        drop(Box::from_raw(tps));
    }
}

/// Bending energy of the fitted deformation, or NaN for a null handle.
///
/// # Safety
/// `tps` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ss_tps_bending_energy(tps: *const SsTps) -> f64 {
    tps.as_ref().map_or(f64::NAN, |t| t.0.bending_energy())
}

/// Evaluates the deformation at `(x, y)` and writes the image to
/// `out_x`/`out_y`.
///
/// # Safety
/// `tps` must be a live handle; `out_x` and `out_y` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_tps_evaluate(
    tps: *const SsTps,
    x: f64,
    y: f64,
    out_x: *mut f64,
    out_y: *mut f64,
) -> SsStatus {
    guarded(|| {
        let Some(tps) = tps.as_ref() else {
            return null_argument("tps");
        };
        if out_x.is_null() || out_y.is_null() {
            return null_argument("out_x/out_y");
        }
        let image = tps.0.evaluate([x, y]);
        *out_x = image[0];
        *out_y = image[1];
        SsStatus::Ok
    })
}

/// Modified band depth of each of `curves` curves sampled on a shared
/// index grid of `grid_len` points. `values` is row-major
/// `curves x grid_len`; `out` receives `curves` depths.
///
/// # Safety
/// `values` must point to `curves * grid_len` readable doubles and `out`
/// to `curves` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ss_band_depths(
    values: *const f64,
    curves: usize,
    grid_len: usize,
    out: *mut f64,
) -> SsStatus {
    guarded(|| {
        if values.is_null() {
            return null_argument("values");
        }
        if out.is_null() {
            return null_argument("out");
        }
        let len = match curves.checked_mul(grid_len) {
            Some(len) if len > 0 => len,
            _ => {
                set_error("curves * grid_len must be positive and not overflow");
                return SsStatus::InvalidArgument;
            }
        };
        let flat = std::slice::from_raw_parts(values, len);
        let rows: Vec<Vec<f64>> = flat.chunks(grid_len).map(|c| c.to_vec()).collect();
        let sample = match depth::FunctionalSample::on_index_grid(rows, vec![]) {
            Ok(sample) => sample,
            Err(err) => return fail(&err),
        };
        match depth::mbd(&sample) {
            Ok(scores) => {
                for (offset, v) in scores.values.iter().enumerate() {
                    *out.add(offset) = *v;
                }
                SsStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Projection depth of each of `count` points (row-major `count x dim`)
/// with respect to the whole sample, using the canonical axes plus
/// `directions` seeded pseudo-random unit vectors. `out` receives `count`
/// depths. The same `directions` and `seed` always give the same result.
///
/// # Safety
/// `points` must point to `count * dim` readable doubles and `out` to
/// `count` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ss_projection_depths(
    points: *const f64,
    count: usize,
    dim: usize,
    directions: usize,
    seed: u64,
    out: *mut f64,
) -> SsStatus {
    guarded(|| {
        if points.is_null() {
            return null_argument("points");
        }
        if out.is_null() {
            return null_argument("out");
        }
        let len = match count.checked_mul(dim) {
            Some(len) if len > 0 => len,
            _ => {
                set_error("count * dim must be positive and not overflow");
                return SsStatus::InvalidArgument;
            }
        };
        let flat = std::slice::from_raw_parts(points, len);
        let sample: Vec<Vec<f64>> = flat.chunks(dim).map(|c| c.to_vec()).collect();
        match depth::projection_depths(&sample, directions, seed) {
            Ok(scores) => {
                for (offset, v) in scores.values.iter().enumerate() {
                    *out.add(offset) = *v;
                }
                SsStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}
