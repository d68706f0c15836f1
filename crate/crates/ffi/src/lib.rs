//! C ABI over `sos-core`.
//!
//! Models are opaque handles created by `sos_model_new` and released with
//! `sos_model_free`. Every fallible call returns a `SosStatus`; on failure
//! `sos_last_error` describes the error raised on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sos_core::dynamics::gillespie::{exit_time, simulate};
use sos_core::dynamics::rates::jump_rate;
use sos_core::dynamics::rng::RngSpec;
use sos_core::model::catalog::PotentialCatalog;
use sos_core::model::config::{Configuration, Move};
use sos_core::model::energy::log_weight_of;
use sos_core::model::params::{HeightBound, MeasureKind, ModelParams};
use sos_core::spectral::eigen::spectral_gap;
use sos_core::spectral::generator::build_generator;
use sos_core::SosError;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SosStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParam = 2,
    LengthMismatch = 3,
    Catalog = 4,
    TooLarge = 5,
    Precondition = 6,
    Io = 7,
    Internal = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SosMeasure {
    Constrained = 0,
    Auxiliary = 1,
}

/// Opaque model handle.
pub struct SosModel {
    params: ModelParams,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &SosError) -> SosStatus {
    match e {
        SosError::InvalidParam { .. } => SosStatus::InvalidParam,
        SosError::LengthMismatch { .. } => SosStatus::LengthMismatch,
        SosError::DisconnectedShape { .. } | SosError::EmptyShape { .. } | SosError::Catalog(_) | SosError::Json(_) => SosStatus::Catalog,
        SosError::TooLarge { .. } => SosStatus::TooLarge,
        SosError::Precondition(_) | SosError::EmptyRegion(_) => SosStatus::Precondition,
        SosError::Io(_) => SosStatus::Io,
        SosError::NotReversible { .. } => SosStatus::Internal,
    }
}

/// Runs `f`, recording any error or panic for `sos_last_error`.
fn guard(f: impl FnOnce() -> Result<(), (SosStatus, String)>) -> SosStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SosStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside sos".into());
            SosStatus::Panic
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, (SosStatus, String)>;
}

impl<T> OrStatus<T> for sos_core::Result<T> {
    fn or_status(self) -> Result<T, (SosStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (SosStatus, String) {
    (SosStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn model_ref<'a>(model: *const SosModel) -> Result<&'a SosModel, (SosStatus, String)> {
    model.as_ref().ok_or_else(|| null("model"))
}

unsafe fn heights<'a>(model: &SosModel, ptr: *const i32, len: usize) -> Result<&'a [i32], (SosStatus, String)> {
    if ptr.is_null() {
        return Err(null("heights"));
    }
    if len != model.params.len {
        return Err((SosStatus::LengthMismatch, format!("configuration has length {len}, expected {}", model.params.len)));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// Creates a model with `len` columns at inverse temperature `beta`. A
/// bound `m` of 0 means no height bound, which only the auxiliary measure
/// accepts. The catalog starts empty and the regions at `eps = 0.1`,
/// `alpha = 0.2`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sos_model_new(len: usize, m: u32, beta: f64, measure: SosMeasure, out: *mut *mut SosModel) -> SosStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let bound = if m == 0 { HeightBound::Infinite } else { HeightBound::Finite(m) };
        let kind = match measure {
            SosMeasure::Constrained => MeasureKind::Constrained,
            SosMeasure::Auxiliary => MeasureKind::Auxiliary,
        };
        let params = ModelParams::new(len, bound, beta, kind).or_status()?;
        *out = Box::into_raw(Box::new(SosModel { params }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from `sos_model_new` and not have been freed; null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn sos_model_free(model: *mut SosModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Sets the exit region `A` (via `eps`) and the start region `B` (via `alpha`).
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sos_model_set_region(model: *mut SosModel, eps: f64, alpha: f64) -> SosStatus {
    guard(|| {
        let m = model.as_mut().ok_or_else(|| null("model"))?;
        m.params = m.params.clone().with_region(eps, alpha).or_status()?;
        Ok(())
    })
}

/// Loads a JSON potential catalog from `path`.
///
/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sos_model_load_catalog(model: *mut SosModel, path: *const c_char) -> SosStatus {
    guard(|| {
        let m = model.as_mut().ok_or_else(|| null("model"))?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| (SosStatus::InvalidParam, "path is not UTF-8".to_string()))?;
        let cat = PotentialCatalog::load(Path::new(path)).or_status()?;
        m.params = m.params.clone().with_catalog(cat);
        Ok(())
    })
}

/// Unnormalized log weight of a configuration; `-inf` outside the support.
///
/// # Safety
/// `model` must be a live handle, `heights` must point to `len` values and
/// `out` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn sos_log_weight(model: *const SosModel, heights_ptr: *const i32, len: usize, out: *mut f64) -> SosStatus {
    guard(|| {
        let m = model_ref(model)?;
        let h = heights(m, heights_ptr, len)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = log_weight_of(h, &m.params);
        Ok(())
    })
}

/// Rate of moving column `site` (1-based) by `direction` (+1 or -1).
///
/// # Safety
/// As for `sos_log_weight`.
#[no_mangle]
pub unsafe extern "C" fn sos_jump_rate(
    model: *const SosModel,
    heights_ptr: *const i32,
    len: usize,
    site: usize,
    direction: i32,
    out: *mut f64,
) -> SosStatus {
    guard(|| {
        let m = model_ref(model)?;
        let h = heights(m, heights_ptr, len)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if site == 0 || site > len {
            return Err((SosStatus::InvalidParam, format!("site must lie in 1..={len}, got {site}")));
        }
        let mv = match direction {
            1 => Move::up(site),
            -1 => Move::down(site),
            d => return Err((SosStatus::InvalidParam, format!("direction must be +1 or -1, got {d}"))),
        };
        *out = jump_rate(h, mv, &m.params);
        Ok(())
    })
}

/// Spectral gap of the generator; `r` truncates the first gradient
/// coordinate of the auxiliary measure and is ignored otherwise.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sos_spectral_gap(model: *const SosModel, r: u32, out: *mut f64) -> SosStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let gen = build_generator(&m.params, r).or_status()?;
        *out = spectral_gap(&gen).or_status()?.gap;
        Ok(())
    })
}

/// Runs the dynamics from `start` up to `horizon`; writes the final
/// configuration to `end` (length `len`) and the number of jumps.
///
/// # Safety
/// `start` and `end` must each hold `len` values; `jumps` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sos_simulate(
    model: *const SosModel,
    start: *const i32,
    len: usize,
    horizon: f64,
    seed: u64,
    end: *mut i32,
    jumps: *mut u64,
) -> SosStatus {
    guard(|| {
        let m = model_ref(model)?;
        let h = heights(m, start, len)?;
        if end.is_null() {
            return Err(null("end"));
        }
        let jumps = jumps.as_mut().ok_or_else(|| null("jumps"))?;
        let tr = simulate(&Configuration(h.to_vec()), horizon, &m.params, RngSpec::new(seed, 0)).or_status()?;
        std::slice::from_raw_parts_mut(end, len).copy_from_slice(tr.end.heights());
        *jumps = tr.events.len() as u64;
        Ok(())
    })
}

/// First exit time from `A` starting at `start`, censored at `horizon`.
///
/// # Safety
/// `start` must hold `len` values; `time` and `censored` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sos_exit_time(
    model: *const SosModel,
    start: *const i32,
    len: usize,
    horizon: f64,
    seed: u64,
    time: *mut f64,
    censored: *mut bool,
) -> SosStatus {
    guard(|| {
        let m = model_ref(model)?;
        let h = heights(m, start, len)?;
        let time = time.as_mut().ok_or_else(|| null("time"))?;
        let censored = censored.as_mut().ok_or_else(|| null("censored"))?;
        let s = exit_time(&Configuration(h.to_vec()), &m.params, RngSpec::new(seed, 0), horizon).or_status()?;
        *time = s.time;
        *censored = s.censored;
        Ok(())
    })
}

/// Message of the last error on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sos_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// NUL-terminated crate version.
#[no_mangle]
pub extern "C" fn sos_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
