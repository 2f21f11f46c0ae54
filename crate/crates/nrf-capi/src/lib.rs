//! C ABI over the reconstruction library.
//!
//! Objects cross the boundary as opaque handles created and destroyed by
//! paired functions; every fallible call returns an [`NrfStatus`] and
//! leaves a message for [`nrf_last_error_message`] on failure. The header
//! `include/nrf.h` is generated by cbindgen at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use nrf_core::baselines::{adjoint_reconstruct, DensityCompensation, GriddingConfig};
use nrf_core::error::NrfError;
use nrf_core::forward::{simulate_analytic, RadialKSpace};
use nrf_core::geometry::ImageGrid;
use nrf_core::metrics::{psnr, ssim, PsnrMode};
use nrf_core::network::PeConfig;
use nrf_core::phantom::PhantomSpec;
use nrf_core::reconstructor::{reconstruct, TrainConfig};
use nrf_core::sampling::{make_omega_grid, make_schedule, Scheme};

/// Call outcome. Anything but `Ok` leaves a message retrievable through
/// `nrf_last_error_message`.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum NrfStatus {
    Ok = 0,
    /// Bad arguments, domain violations, malformed formats.
    InvalidArgument = 1,
    /// File system failure.
    Io = 2,
    /// Training produced a non-finite loss.
    Diverged = 3,
    /// A required pointer was null.
    NullPointer = 4,
    /// Internal panic caught at the boundary.
    Internal = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &NrfError) -> NrfStatus {
    match err.exit_code() {
        2 => NrfStatus::Io,
        3 => NrfStatus::Diverged,
        _ => NrfStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> NrfStatus) -> NrfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            NrfStatus::Internal
        }
    }
}

/// Copies the last error message (UTF-8, NUL-terminated when it fits) into
/// `buf` and returns the full message length in bytes. A zero return means
/// no error has been recorded on this thread.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be null (then only the
/// length is returned).
#[no_mangle]
pub unsafe extern "C" fn nrf_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

unsafe fn cstr<'a>(p: *const c_char) -> Option<&'a str> {
    if p.is_null() {
        return None;
    }
    CStr::from_ptr(p).to_str().ok()
}

/// Analytic ellipse phantom.
pub struct NrfPhantom {
    inner: PhantomSpec,
}

/// Radially sampled measurement set.
pub struct NrfKspace {
    inner: RadialKSpace,
}

/// Real or complex image on a square pixel grid.
pub struct NrfImage {
    inner: ImageGrid,
}

macro_rules! out_write {
    ($out:expr, $val:expr) => {{
        if $out.is_null() {
            set_error("output pointer is null");
            return NrfStatus::NullPointer;
        }
        unsafe { *$out = $val };
        NrfStatus::Ok
    }};
}

macro_rules! try_ffi {
    ($expr:expr) => {
        match $expr {
            Ok(v) => v,
            Err(e) => {
                set_error(e.to_string());
                return status_of(&e);
            }
        }
    };
}

/// Builds a builtin phantom (`"shepp-logan"` or `"simple"`) scaled to the
/// square `[-extent/2, extent/2]^2`.
///
/// # Safety
/// `name` must be a NUL-terminated UTF-8 string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nrf_phantom_builtin(
    name: *const c_char,
    extent: f64,
    out: *mut *mut NrfPhantom,
) -> NrfStatus {
    guard(|| {
        let Some(name) = (unsafe { cstr(name) }) else {
            set_error("phantom name is null or not UTF-8");
            return NrfStatus::NullPointer;
        };
        let spec = try_ffi!(PhantomSpec::builtin(name, extent));
        out_write!(out, Box::into_raw(Box::new(NrfPhantom { inner: spec })))
    })
}

/// Loads a phantom from the text format (`cx cy a b angle density` rows).
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nrf_phantom_load(
    path: *const c_char,
    extent: f64,
    out: *mut *mut NrfPhantom,
) -> NrfStatus {
    guard(|| {
        let Some(path) = (unsafe { cstr(path) }) else {
            set_error("path is null or not UTF-8");
            return NrfStatus::NullPointer;
        };
        let path = PathBuf::from(path);
        let text = try_ffi!(std::fs::read_to_string(&path).map_err(|e| NrfError::io(&path, e)));
        let ellipses = try_ffi!(nrf_core::phantom::parse_phantom_text(&text));
        let spec = try_ffi!(PhantomSpec::new(ellipses, extent));
        out_write!(out, Box::into_raw(Box::new(NrfPhantom { inner: spec })))
    })
}

/// # Safety
/// `p` must come from a phantom constructor and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn nrf_phantom_free(p: *mut NrfPhantom) {
    if !p.is_null() {
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Simulates a radial acquisition of the phantom on an `n`-pixel grid:
/// `scheme` is one of uniform|limited|random|stratified|golden.
///
/// # Safety
/// `phantom` must be a live handle; `scheme` a NUL-terminated string;
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nrf_simulate(
    phantom: *const NrfPhantom,
    n: usize,
    scheme: *const c_char,
    r_factor: f64,
    seed: u64,
    noise_sigma: f64,
    out: *mut *mut NrfKspace,
) -> NrfStatus {
    guard(|| {
        let Some(phantom) = (unsafe { phantom.as_ref() }) else {
            set_error("phantom handle is null");
            return NrfStatus::NullPointer;
        };
        let Some(scheme) = (unsafe { cstr(scheme) }) else {
            set_error("scheme is null or not UTF-8");
            return NrfStatus::NullPointer;
        };
        let scheme = try_ffi!(Scheme::parse(scheme));
        let schedule = try_ffi!(make_schedule(scheme, n, r_factor, seed));
        let grid = try_ffi!(make_omega_grid(n, phantom.inner.extent_v()));
        let k = try_ffi!(simulate_analytic(&phantom.inner, &schedule, &grid, noise_sigma, seed));
        out_write!(out, Box::into_raw(Box::new(NrfKspace { inner: k })))
    })
}

/// # Safety
/// `path` must be NUL-terminated UTF-8; `k` a live handle.
#[no_mangle]
pub unsafe extern "C" fn nrf_kspace_save(k: *const NrfKspace, path: *const c_char) -> NrfStatus {
    guard(|| {
        let Some(k) = (unsafe { k.as_ref() }) else {
            set_error("k-space handle is null");
            return NrfStatus::NullPointer;
        };
        let Some(path) = (unsafe { cstr(path) }) else {
            set_error("path is null or not UTF-8");
            return NrfStatus::NullPointer;
        };
        try_ffi!(nrf_core::io::save_kspace(&k.inner, std::path::Path::new(path)));
        NrfStatus::Ok
    })
}

/// # Safety
/// `path` must be NUL-terminated UTF-8; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nrf_kspace_load(path: *const c_char, out: *mut *mut NrfKspace) -> NrfStatus {
    guard(|| {
        let Some(path) = (unsafe { cstr(path) }) else {
            set_error("path is null or not UTF-8");
            return NrfStatus::NullPointer;
        };
        let k = try_ffi!(nrf_core::io::load_kspace(std::path::Path::new(path)));
        out_write!(out, Box::into_raw(Box::new(NrfKspace { inner: k })))
    })
}

/// # Safety
/// `k` must come from a k-space constructor and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn nrf_kspace_free(k: *mut NrfKspace) {
    if !k.is_null() {
        drop(unsafe { Box::from_raw(k) });
    }
}

/// Number of spokes in a measurement set.
///
/// # Safety
/// `k` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nrf_kspace_spokes(k: *const NrfKspace) -> usize {
    unsafe { k.as_ref() }.map_or(0, |k| k.inner.n_spokes())
}

/// Trains the coordinate field against the measurement's projections and
/// returns the magnitude image. `steps`, `lr` and `pe_l` of 0 select the
/// defaults (500, 5e-4, 20).
///
/// # Safety
/// `k` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nrf_reconstruct(
    k: *const NrfKspace,
    steps: usize,
    lr: f64,
    pe_l: usize,
    seed: u64,
    n_out: usize,
    out: *mut *mut NrfImage,
) -> NrfStatus {
    guard(|| {
        let Some(k) = (unsafe { k.as_ref() }) else {
            set_error("k-space handle is null");
            return NrfStatus::NullPointer;
        };
        let defaults = TrainConfig::default();
        let cfg = TrainConfig {
            steps: if steps == 0 { defaults.steps } else { steps },
            lr: if lr == 0.0 { defaults.lr } else { lr },
            seed,
            ..defaults
        };
        let pe = PeConfig::new(if pe_l == 0 { 20 } else { pe_l });
        let (img, _) = try_ffi!(reconstruct(&k.inner, &cfg, &pe, n_out));
        out_write!(out, Box::into_raw(Box::new(NrfImage { inner: img })))
    })
}

/// Zero-filled adjoint reconstruction; `ramp != 0` applies radial density
/// compensation.
///
/// # Safety
/// `k` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nrf_adjoint(
    k: *const NrfKspace,
    ramp: i32,
    n_out: usize,
    out: *mut *mut NrfImage,
) -> NrfStatus {
    guard(|| {
        let Some(k) = (unsafe { k.as_ref() }) else {
            set_error("k-space handle is null");
            return NrfStatus::NullPointer;
        };
        let cfg = GriddingConfig {
            density_compensation: if ramp != 0 {
                DensityCompensation::Ramp
            } else {
                DensityCompensation::None
            },
            n_out,
        };
        let img = try_ffi!(adjoint_reconstruct(&k.inner, &cfg));
        out_write!(out, Box::into_raw(Box::new(NrfImage { inner: img.magnitude() })))
    })
}

/// Rasterizes the phantom to a reference image.
///
/// # Safety
/// `phantom` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nrf_rasterize(
    phantom: *const NrfPhantom,
    n: usize,
    out: *mut *mut NrfImage,
) -> NrfStatus {
    guard(|| {
        let Some(phantom) = (unsafe { phantom.as_ref() }) else {
            set_error("phantom handle is null");
            return NrfStatus::NullPointer;
        };
        let img = try_ffi!(nrf_core::phantom::rasterize(&phantom.inner, n));
        out_write!(out, Box::into_raw(Box::new(NrfImage { inner: img })))
    })
}

/// Pixels per side.
///
/// # Safety
/// `img` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nrf_image_size(img: *const NrfImage) -> usize {
    unsafe { img.as_ref() }.map_or(0, |i| i.inner.n())
}

/// Physical side length.
///
/// # Safety
/// `img` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nrf_image_extent(img: *const NrfImage) -> f64 {
    unsafe { img.as_ref() }.map_or(0.0, |i| i.inner.extent_v())
}

/// Copies the row-major magnitude values into `buf` (length `cap`); the
/// image has `n*n` values.
///
/// # Safety
/// `img` must be live; `buf` must point to `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nrf_image_magnitudes(
    img: *const NrfImage,
    buf: *mut f64,
    cap: usize,
) -> NrfStatus {
    guard(|| {
        let Some(img) = (unsafe { img.as_ref() }) else {
            set_error("image handle is null");
            return NrfStatus::NullPointer;
        };
        if buf.is_null() {
            set_error("buffer is null");
            return NrfStatus::NullPointer;
        }
        let vals = img.inner.values();
        if cap < vals.len() {
            set_error(format!("buffer of {cap} too small for {} values", vals.len()));
            return NrfStatus::InvalidArgument;
        }
        for (i, z) in vals.iter().enumerate() {
            unsafe { *buf.add(i) = z.norm() };
        }
        NrfStatus::Ok
    })
}

/// # Safety
/// `img` must be live; `path` NUL-terminated UTF-8.
#[no_mangle]
pub unsafe extern "C" fn nrf_image_save(img: *const NrfImage, path: *const c_char) -> NrfStatus {
    guard(|| {
        let Some(img) = (unsafe { img.as_ref() }) else {
            set_error("image handle is null");
            return NrfStatus::NullPointer;
        };
        let Some(path) = (unsafe { cstr(path) }) else {
            set_error("path is null or not UTF-8");
            return NrfStatus::NullPointer;
        };
        try_ffi!(nrf_core::io::save_image(&img.inner, std::path::Path::new(path)));
        NrfStatus::Ok
    })
}

/// # Safety
/// `path` must be NUL-terminated UTF-8; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nrf_image_load(path: *const c_char, out: *mut *mut NrfImage) -> NrfStatus {
    guard(|| {
        let Some(path) = (unsafe { cstr(path) }) else {
            set_error("path is null or not UTF-8");
            return NrfStatus::NullPointer;
        };
        let img = try_ffi!(nrf_core::io::load_image(std::path::Path::new(path)));
        out_write!(out, Box::into_raw(Box::new(NrfImage { inner: img })))
    })
}

/// # Safety
/// `img` must come from an image constructor and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn nrf_image_free(img: *mut NrfImage) {
    if !img.is_null() {
        drop(unsafe { Box::from_raw(img) });
    }
}

/// Whole-image SSIM of `x` against reference `y`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nrf_ssim(
    x: *const NrfImage,
    y: *const NrfImage,
    out: *mut f64,
) -> NrfStatus {
    guard(|| {
        let (Some(x), Some(y)) = (unsafe { x.as_ref() }, unsafe { y.as_ref() }) else {
            set_error("image handle is null");
            return NrfStatus::NullPointer;
        };
        let v = try_ffi!(ssim(&x.inner.magnitude(), &y.inner.magnitude()));
        out_write!(out, v)
    })
}

/// PSNR in dB of `x` against reference `y`; `literal != 0` uses the summed
/// squared error in place of the mean.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nrf_psnr(
    x: *const NrfImage,
    y: *const NrfImage,
    literal: i32,
    out: *mut f64,
) -> NrfStatus {
    guard(|| {
        let (Some(x), Some(y)) = (unsafe { x.as_ref() }, unsafe { y.as_ref() }) else {
            set_error("image handle is null");
            return NrfStatus::NullPointer;
        };
        let mode = if literal != 0 { PsnrMode::Literal } else { PsnrMode::Mse };
        let v = try_ffi!(psnr(&x.inner.magnitude(), &y.inner.magnitude(), mode));
        out_write!(out, v)
    })
}
