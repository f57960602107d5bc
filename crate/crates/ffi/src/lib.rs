//! C ABI for the flash library.
//!
//! Handles are opaque pointers owned by Rust; every constructor has a
//! matching `_free`. Functions that can fail return a [`TfStatus`] and leave
//! a message retrievable with [`tf_last_error_message`] (thread-local).
//! Derivative mode is selected by `fd_step`: pass 0 or a negative value for
//! exact dual-number derivatives, a positive value for central differences
//! at that step.
//!
//! The header `include/thermoflash.h` is regenerated by the build script.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use thermoflash::components::ComponentSet;
use thermoflash::eos::KDerivative;
use thermoflash::flash::{
    flash_ph, flash_pt, flash_pv, DerivativeMode, FlashResult, SolverConfig,
};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfStatus {
    TfOk = 0,
    TfErrInvalidArgument = 1,
    TfErrComputation = 2,
    TfErrPanic = 3,
}

/// Opaque component-set handle.
pub struct TfComponentSet {
    set: ComponentSet,
}

/// Opaque flash-result handle.
pub struct TfFlashResult {
    result: FlashResult,
    pressure_pa: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap_or_default());
}

fn guard<F: FnOnce() -> TfStatus>(f: F) -> TfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            TfStatus::TfErrPanic
        }
    }
}

/// Copy the message of the most recent error on this thread into `buf`
/// (NUL-terminated, truncated to `len`). Returns the full message length in
/// bytes, excluding the terminator.
///
/// # Safety
/// `buf` must point to `len` writable bytes, or be null to query the length.
#[no_mangle]
pub unsafe extern "C" fn tf_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// The four-species set shipped with the library. Never fails.
#[no_mangle]
pub extern "C" fn tf_component_set_bundled() -> *mut TfComponentSet {
    Box::into_raw(Box::new(TfComponentSet {
        set: ComponentSet::bundled(),
    }))
}

/// Load a component data file. On success writes the new handle to `out`.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tf_component_set_load(
    path: *const c_char,
    out: *mut *mut TfComponentSet,
) -> TfStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            set_error("null pointer argument");
            return TfStatus::TfErrInvalidArgument;
        }
        let path = match CStr::from_ptr(path).to_str() {
            Ok(p) => p,
            Err(_) => {
                set_error("path is not valid UTF-8");
                return TfStatus::TfErrInvalidArgument;
            }
        };
        match ComponentSet::from_file(path) {
            Ok(set) => {
                *out = Box::into_raw(Box::new(TfComponentSet { set }));
                TfStatus::TfOk
            }
            Err(e) => {
                set_error(&e.to_string());
                TfStatus::TfErrInvalidArgument
            }
        }
    })
}

/// Number of species in the set.
///
/// # Safety
/// `set` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn tf_component_set_len(set: *const TfComponentSet) -> usize {
    if set.is_null() {
        return 0;
    }
    (*set).set.len()
}

/// Copy the name of species `index` into `buf` (NUL-terminated, truncated).
/// Returns the full name length, or 0 for an invalid index.
///
/// # Safety
/// `set` must be a live handle; `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tf_component_set_name(
    set: *const TfComponentSet,
    index: usize,
    buf: *mut c_char,
    len: usize,
) -> usize {
    if set.is_null() {
        return 0;
    }
    let Some(component) = (&(*set).set.components).get(index) else {
        return 0;
    };
    let bytes = component.name.as_bytes();
    if !buf.is_null() && len > 0 {
        let n = bytes.len().min(len - 1);
        std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
        *buf.add(n) = 0;
    }
    bytes.len()
}

/// # Safety
/// `set` must come from a constructor of this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tf_component_set_free(set: *mut TfComponentSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

unsafe fn feed_slice<'a>(feed: *const f64, n: usize) -> Option<&'a [f64]> {
    if feed.is_null() || n == 0 {
        None
    } else {
        Some(std::slice::from_raw_parts(feed, n))
    }
}

fn mode_from_step(fd_step: f64) -> DerivativeMode {
    if fd_step > 0.0 {
        DerivativeMode::Fd { step: fd_step }
    } else {
        DerivativeMode::Ad
    }
}

unsafe fn run_flash(
    set: *const TfComponentSet,
    feed: *const f64,
    n: usize,
    pressure_pa: f64,
    out: *mut *mut TfFlashResult,
    f: impl FnOnce(&ComponentSet, &[f64]) -> Result<FlashResult, thermoflash::FlashError>,
) -> TfStatus {
    if set.is_null() || out.is_null() {
        set_error("null pointer argument");
        return TfStatus::TfErrInvalidArgument;
    }
    let Some(feed) = feed_slice(feed, n) else {
        set_error("feed pointer is null or empty");
        return TfStatus::TfErrInvalidArgument;
    };
    let set = &(*set).set;
    if feed.len() != set.len() {
        set_error(&format!(
            "feed has {} entries for {} components",
            feed.len(),
            set.len()
        ));
        return TfStatus::TfErrInvalidArgument;
    }
    match f(set, feed) {
        Ok(result) => {
            *out = Box::into_raw(Box::new(TfFlashResult {
                result,
                pressure_pa,
            }));
            TfStatus::TfOk
        }
        Err(e) => {
            set_error(&e.to_string());
            TfStatus::TfErrComputation
        }
    }
}

/// Isothermal flash at (T, P). A non-converged solve still produces a result
/// handle; check `tf_result_converged`.
///
/// # Safety
/// `set` must be live, `feed` must point to `n` doubles, `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tf_flash_pt(
    set: *const TfComponentSet,
    feed: *const f64,
    n: usize,
    temperature_k: f64,
    pressure_pa: f64,
    fd_step: f64,
    out: *mut *mut TfFlashResult,
) -> TfStatus {
    guard(|| {
        run_flash(set, feed, n, pressure_pa, out, |set, feed| {
            flash_pt(
                set,
                feed,
                temperature_k,
                pressure_pa,
                mode_from_step(fd_step),
                &SolverConfig::default(),
            )
        })
    })
}

/// Fixed vapor-fraction flash: solves for temperature.
///
/// # Safety
/// Same contract as [`tf_flash_pt`].
#[no_mangle]
pub unsafe extern "C" fn tf_flash_pv(
    set: *const TfComponentSet,
    feed: *const f64,
    n: usize,
    vapor_fraction: f64,
    pressure_pa: f64,
    fd_step: f64,
    out: *mut *mut TfFlashResult,
) -> TfStatus {
    guard(|| {
        run_flash(set, feed, n, pressure_pa, out, |set, feed| {
            flash_pv(
                set,
                feed,
                pressure_pa,
                vapor_fraction,
                mode_from_step(fd_step),
                None,
                &SolverConfig::default(),
            )
        })
    })
}

/// Fixed-enthalpy flash: solves for the temperature at which the stream
/// enthalpy equals `h_total_j_per_mol`.
///
/// # Safety
/// Same contract as [`tf_flash_pt`].
#[no_mangle]
pub unsafe extern "C" fn tf_flash_ph(
    set: *const TfComponentSet,
    feed: *const f64,
    n: usize,
    h_total_j_per_mol: f64,
    pressure_pa: f64,
    fd_step: f64,
    out: *mut *mut TfFlashResult,
) -> TfStatus {
    guard(|| {
        run_flash(set, feed, n, pressure_pa, out, |set, feed| {
            flash_ph(
                set,
                feed,
                pressure_pa,
                h_total_j_per_mol,
                mode_from_step(fd_step),
                None,
                &SolverConfig::default(),
            )
        })
    })
}

/// Stream enthalpy of a feed flashed at (T, P), J/mol. Useful for building
/// PH targets from feed conditions plus a duty.
///
/// # Safety
/// `set` and `feed` as in [`tf_flash_pt`]; `out` must point to a double.
#[no_mangle]
pub unsafe extern "C" fn tf_feed_enthalpy(
    set: *const TfComponentSet,
    feed: *const f64,
    n: usize,
    temperature_k: f64,
    pressure_pa: f64,
    out: *mut f64,
) -> TfStatus {
    guard(|| {
        if set.is_null() || out.is_null() {
            set_error("null pointer argument");
            return TfStatus::TfErrInvalidArgument;
        }
        let Some(feed) = feed_slice(feed, n) else {
            set_error("feed pointer is null or empty");
            return TfStatus::TfErrInvalidArgument;
        };
        match thermoflash::flash::feed_enthalpy(
            &(*set).set,
            feed,
            temperature_k,
            pressure_pa,
            &SolverConfig::default(),
        ) {
            Ok(h) => {
                *out = h;
                TfStatus::TfOk
            }
            Err(e) => {
                set_error(&e.to_string());
                TfStatus::TfErrComputation
            }
        }
    })
}

/// Which variable a K-value sensitivity is taken against.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfKDerivative {
    TfKdTemperature = 0,
    TfKdPressure = 1,
}

/// Exact dK_i/d(wrt) at fixed phase compositions, via dual numbers.
/// `x_liq` and `y_vap` are normalized compositions of length `n`; `out`
/// receives `n` derivatives.
///
/// # Safety
/// All pointers must reference `n` readable (writable for `out`) doubles.
#[no_mangle]
pub unsafe extern "C" fn tf_k_derivatives(
    set: *const TfComponentSet,
    temperature_k: f64,
    pressure_pa: f64,
    x_liq: *const f64,
    y_vap: *const f64,
    n: usize,
    wrt: TfKDerivative,
    out: *mut f64,
) -> TfStatus {
    guard(|| {
        if set.is_null() || x_liq.is_null() || y_vap.is_null() || out.is_null() {
            set_error("null pointer argument");
            return TfStatus::TfErrInvalidArgument;
        }
        let set = &(*set).set;
        if n != set.len() {
            set_error(&format!("{} fractions for {} components", n, set.len()));
            return TfStatus::TfErrInvalidArgument;
        }
        let x = std::slice::from_raw_parts(x_liq, n);
        let y = std::slice::from_raw_parts(y_vap, n);
        let wrt = match wrt {
            TfKDerivative::TfKdTemperature => KDerivative::Temperature,
            TfKDerivative::TfKdPressure => KDerivative::Pressure,
        };
        match thermoflash::eos::k_derivatives(set, temperature_k, pressure_pa, x, y, wrt) {
            Ok(dk) => {
                std::ptr::copy_nonoverlapping(dk.as_ptr(), out, n);
                TfStatus::TfOk
            }
            Err(e) => {
                set_error(&e.to_string());
                TfStatus::TfErrComputation
            }
        }
    })
}

/// 1 when the solve converged, 0 when it was flagged.
///
/// # Safety
/// `result` must be a live handle from a flash call.
#[no_mangle]
pub unsafe extern "C" fn tf_result_converged(result: *const TfFlashResult) -> i32 {
    (*result).result.converged as i32
}

/// Vapor fraction of the converged split.
///
/// # Safety
/// `result` must be a live handle from a flash call.
#[no_mangle]
pub unsafe extern "C" fn tf_result_vapor_fraction(result: *const TfFlashResult) -> f64 {
    (*result).result.vapor_fraction
}

/// Temperature of the result state, K.
///
/// # Safety
/// `result` must be a live handle from a flash call.
#[no_mangle]
pub unsafe extern "C" fn tf_result_temperature_k(result: *const TfFlashResult) -> f64 {
    (*result).result.temperature
}

/// Pressure of the result state, Pa.
///
/// # Safety
/// `result` must be a live handle from a flash call.
#[no_mangle]
pub unsafe extern "C" fn tf_result_pressure_pa(result: *const TfFlashResult) -> f64 {
    (*result).pressure_pa
}

/// Number of components in the result vectors.
///
/// # Safety
/// `result` must be a live handle from a flash call.
#[no_mangle]
pub unsafe extern "C" fn tf_result_len(result: *const TfFlashResult) -> usize {
    (*result).result.x.len()
}

/// Outer (Newton / substitution) iteration count.
///
/// # Safety
/// `result` must be a live handle from a flash call.
#[no_mangle]
pub unsafe extern "C" fn tf_result_outer_iterations(result: *const TfFlashResult) -> usize {
    (*result).result.outer_iters
}

/// Accumulated inner iteration count.
///
/// # Safety
/// `result` must be a live handle from a flash call.
#[no_mangle]
pub unsafe extern "C" fn tf_result_inner_iterations(result: *const TfFlashResult) -> usize {
    (*result).result.inner_iters
}

/// 1 when the feed collapsed to a single phase and V was clamped.
///
/// # Safety
/// `result` must be a live handle from a flash call.
#[no_mangle]
pub unsafe extern "C" fn tf_result_single_phase(result: *const TfFlashResult) -> i32 {
    (*result).result.single_phase.is_some() as i32
}

unsafe fn component_value(
    result: *const TfFlashResult,
    index: usize,
    get: impl Fn(&FlashResult) -> &[f64],
) -> f64 {
    if result.is_null() {
        return f64::NAN;
    }
    get(&(*result).result)
        .get(index)
        .copied()
        .unwrap_or(f64::NAN)
}

/// Liquid mole fraction of component `index`; NaN for an invalid index.
///
/// # Safety
/// `result` must be a live handle from a flash call.
#[no_mangle]
pub unsafe extern "C" fn tf_result_x(result: *const TfFlashResult, index: usize) -> f64 {
    component_value(result, index, |r| &r.x)
}

/// Vapor mole fraction of component `index`; NaN for an invalid index.
///
/// # Safety
/// `result` must be a live handle from a flash call.
#[no_mangle]
pub unsafe extern "C" fn tf_result_y(result: *const TfFlashResult, index: usize) -> f64 {
    component_value(result, index, |r| &r.y)
}

/// Equilibrium constant of component `index`; NaN for an invalid index.
///
/// # Safety
/// `result` must be a live handle from a flash call.
#[no_mangle]
pub unsafe extern "C" fn tf_result_k(result: *const TfFlashResult, index: usize) -> f64 {
    component_value(result, index, |r| &r.k)
}

/// # Safety
/// `result` must come from a flash call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tf_flash_result_free(result: *mut TfFlashResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
