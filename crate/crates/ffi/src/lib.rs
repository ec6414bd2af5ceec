//! C interface to `fsgd-core`.
//!
//! Every function returns an [`FsgdStatus`]; on failure the message for the
//! calling thread is available from [`fsgd_last_error`]. Handles are opaque and
//! owned by the caller, who releases them with the matching `_free` function.
//! Handles are not synchronized: use one handle from one thread at a time.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use fsgd_core::lepski::select_and_step;
use fsgd_core::{
    checkpoint, BasisFamily, FsgdError, LepskiConfig, ModelState, Sample, Schedule, SieveRule, SieveState,
    SquaredLoss,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsgdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Divergence = 4,
    Parse = 5,
    Checkpoint = 6,
    Io = 7,
    Panic = 8,
}

/// Model coefficients and step counter.
pub struct FsgdModel(ModelState);

/// A learning-rate and truncation rule.
pub struct FsgdSchedule(Schedule);

/// Sieve-SGD state; predictions use the averaged model.
pub struct FsgdSieve(SieveState);

/// Smoothness grid bounds and rate constants for adaptive selection.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FsgdLepskiConfig {
    pub s0: f64,
    pub s1: f64,
    pub a: f64,
    pub b: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = clean);
}

fn status_of(err: &FsgdError) -> FsgdStatus {
    match err.root() {
        FsgdError::Domain(_) | FsgdError::Config(_) => FsgdStatus::InvalidArgument,
        FsgdError::DimensionMismatch { .. } => FsgdStatus::DimensionMismatch,
        FsgdError::Divergence { .. } => FsgdStatus::Divergence,
        FsgdError::Parse { .. } => FsgdStatus::Parse,
        FsgdError::Checkpoint(_) => FsgdStatus::Checkpoint,
        FsgdError::Io(_) => FsgdStatus::Io,
        FsgdError::Replication { .. } => FsgdStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Core(FsgdError),
}

impl From<FsgdError> for Failure {
    fn from(e: FsgdError) -> Self {
        Failure::Core(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn guard<F: FnOnce() -> Outcome>(f: F) -> FsgdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FsgdStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            FsgdStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            FsgdStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> std::result::Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn get_mut<'a, T>(p: *mut T, what: &'static str) -> std::result::Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> std::result::Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut T, value: T, what: &'static str) -> Outcome {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_handle<T>(out: *mut *mut T, value: T) -> Outcome {
    put(out, Box::into_raw(Box::new(value)), "out")
}

unsafe fn path_of(p: *const c_char) -> std::result::Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::Null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| FsgdError::Config("path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

fn sample(x: &[f64], y: f64) -> std::result::Result<Sample, Failure> {
    Ok(Sample::new(x.to_vec(), y)?)
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn fsgd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fsgd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Value of the `j`-th trigonometric basis function at `x`.
#[no_mangle]
pub unsafe extern "C" fn fsgd_basis_eval(j: usize, x: f64, out: *mut f64) -> FsgdStatus {
    guard(|| put(out, BasisFamily::trigonometric().eval(j, x)?, "out"))
}

/// Sup-norm bound of the basis functions.
#[no_mangle]
pub extern "C" fn fsgd_basis_bound() -> f64 {
    BasisFamily::trigonometric().bound()
}

// Schedules.

fn positive(vals: &[f64]) -> std::result::Result<(), Failure> {
    if vals.iter().all(|v| v.is_finite() && *v > 0.0) {
        Ok(())
    } else {
        Err(FsgdError::Config("schedule constants must be finite and > 0".into()).into())
    }
}

#[no_mangle]
pub unsafe extern "C" fn fsgd_schedule_fixed_p(a: f64, b: f64, s: f64, out: *mut *mut FsgdSchedule) -> FsgdStatus {
    guard(|| {
        positive(&[a, b, s])?;
        put_handle(out, FsgdSchedule(Schedule::fixed_p(a, b, s)))
    })
}

#[no_mangle]
pub unsafe extern "C" fn fsgd_schedule_three_stage(
    p: usize,
    a1: f64,
    a2: f64,
    b: f64,
    s: f64,
    out: *mut *mut FsgdSchedule,
) -> FsgdStatus {
    guard(|| {
        positive(&[a1, a2, b, s])?;
        if p == 0 {
            return Err(FsgdError::Config("p must be >= 1".into()).into());
        }
        put_handle(out, FsgdSchedule(Schedule::three_stage(p, a1, a2, b, s)))
    })
}

#[no_mangle]
pub unsafe extern "C" fn fsgd_schedule_polynomial(a: f64, s: f64, out: *mut *mut FsgdSchedule) -> FsgdStatus {
    guard(|| {
        positive(&[a, s])?;
        put_handle(out, FsgdSchedule(Schedule::polynomial(a, s)))
    })
}

#[no_mangle]
pub unsafe extern "C" fn fsgd_schedule_constant(gamma: f64, trunc: usize, out: *mut *mut FsgdSchedule) -> FsgdStatus {
    guard(|| {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(FsgdError::Config("gamma must be finite and >= 0".into()).into());
        }
        put_handle(out, FsgdSchedule(Schedule::constant(gamma, trunc)))
    })
}

/// The rule used for the Sieve-SGD comparison runs.
#[no_mangle]
pub unsafe extern "C" fn fsgd_schedule_sieve_default(out: *mut *mut FsgdSchedule) -> FsgdStatus {
    guard(|| put_handle(out, FsgdSchedule(SieveRule::default().schedule())))
}

/// Learning rate and truncation for step `i >= 1`.
#[no_mangle]
pub unsafe extern "C" fn fsgd_schedule_at(
    schedule: *const FsgdSchedule,
    i: u64,
    gamma: *mut f64,
    trunc: *mut usize,
) -> FsgdStatus {
    guard(|| {
        let sch = get(schedule, "schedule")?;
        if i == 0 {
            return Err(FsgdError::Domain("step index starts at 1".into()).into());
        }
        let at = sch.0.at(i);
        put(gamma, at.gamma, "gamma")?;
        put(trunc, at.trunc, "trunc")
    })
}

#[no_mangle]
pub unsafe extern "C" fn fsgd_schedule_free(schedule: *mut FsgdSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

// Models.

#[no_mangle]
pub unsafe extern "C" fn fsgd_model_new(p: usize, include_intercept: bool, out: *mut *mut FsgdModel) -> FsgdStatus {
    guard(|| {
        let state = ModelState::new(p, include_intercept, BasisFamily::trigonometric())?;
        put_handle(out, FsgdModel(state))
    })
}

#[no_mangle]
pub unsafe extern "C" fn fsgd_model_clone(model: *const FsgdModel, out: *mut *mut FsgdModel) -> FsgdStatus {
    guard(|| {
        let m = get(model, "model")?;
        put_handle(out, FsgdModel(m.0.clone()))
    })
}

#[no_mangle]
pub unsafe extern "C" fn fsgd_model_free(model: *mut FsgdModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

#[no_mangle]
pub unsafe extern "C" fn fsgd_model_dim(model: *const FsgdModel, out: *mut usize) -> FsgdStatus {
    guard(|| put(out, get(model, "model")?.0.p(), "out"))
}

#[no_mangle]
pub unsafe extern "C" fn fsgd_model_step_count(model: *const FsgdModel, out: *mut u64) -> FsgdStatus {
    guard(|| put(out, get(model, "model")?.0.step_count(), "out"))
}

/// One update with explicit learning rate and truncation. `residual` may be
/// null; otherwise it receives `y - f(x)` before the update.
#[no_mangle]
pub unsafe extern "C" fn fsgd_model_step(
    model: *mut FsgdModel,
    x: *const f64,
    p: usize,
    y: f64,
    gamma: f64,
    trunc: usize,
    residual: *mut f64,
) -> FsgdStatus {
    guard(|| {
        let m = get_mut(model, "model")?;
        let s = sample(slice(x, p, "x")?, y)?;
        let r = m.0.step(&s, gamma, trunc, &SquaredLoss)?;
        if !residual.is_null() {
            residual.write(r);
        }
        Ok(())
    })
}

/// Feeds `rows` samples (row-major `x`, `rows * p` values) using the schedule
/// at the model's current step. Stops at the first failing row, leaving the
/// model as it was after the previous row.
#[no_mangle]
pub unsafe extern "C" fn fsgd_model_fit(
    model: *mut FsgdModel,
    schedule: *const FsgdSchedule,
    x: *const f64,
    y: *const f64,
    rows: usize,
    p: usize,
) -> FsgdStatus {
    guard(|| {
        let m = get_mut(model, "model")?;
        let sch = get(schedule, "schedule")?;
        let xs = slice(x, rows * p, "x")?;
        let ys = slice(y, rows, "y")?;
        for (row, &yv) in ys.iter().enumerate() {
            let at = sch.0.at(m.0.step_count() + 1);
            let s = sample(&xs[row * p..(row + 1) * p], yv)?;
            m.0.step(&s, at.gamma, at.trunc, &SquaredLoss)?;
        }
        Ok(())
    })
}

/// One adaptive step; the selected smoothness is written to `chosen_s` when
/// it is non-null.
#[no_mangle]
pub unsafe extern "C" fn fsgd_model_lepski_step(
    model: *mut FsgdModel,
    cfg: FsgdLepskiConfig,
    x: *const f64,
    p: usize,
    y: f64,
    chosen_s: *mut f64,
) -> FsgdStatus {
    guard(|| {
        let m = get_mut(model, "model")?;
        let cfg = LepskiConfig::new(cfg.s0, cfg.s1, cfg.a, cfg.b)?;
        let s = sample(slice(x, p, "x")?, y)?;
        let sel = select_and_step(&mut m.0, &s, &cfg, &SquaredLoss)?;
        if !chosen_s.is_null() {
            chosen_s.write(sel.s);
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn fsgd_model_predict(model: *const FsgdModel, x: *const f64, p: usize, out: *mut f64) -> FsgdStatus {
    guard(|| {
        let m = get(model, "model")?;
        put(out, m.0.predict(slice(x, p, "x")?)?, "out")
    })
}

/// Predicts `rows` row-major points into `out[0..rows]`.
#[no_mangle]
pub unsafe extern "C" fn fsgd_model_predict_batch(
    model: *const FsgdModel,
    x: *const f64,
    rows: usize,
    p: usize,
    out: *mut f64,
) -> FsgdStatus {
    guard(|| {
        let m = get(model, "model")?;
        let xs = slice(x, rows * p, "x")?;
        if rows > 0 && out.is_null() {
            return Err(Failure::Null("out"));
        }
        let mut values = Vec::with_capacity(rows);
        for row in 0..rows {
            values.push(m.0.predict(&xs[row * p..(row + 1) * p])?);
        }
        if rows > 0 {
            ptr::copy_nonoverlapping(values.as_ptr(), out, rows);
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn fsgd_model_save(model: *const FsgdModel, path: *const c_char) -> FsgdStatus {
    guard(|| {
        let m = get(model, "model")?;
        checkpoint::save(&m.0, &path_of(path)?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn fsgd_model_load(path: *const c_char, out: *mut *mut FsgdModel) -> FsgdStatus {
    guard(|| {
        let state = checkpoint::load(&path_of(path)?)?;
        put_handle(out, FsgdModel(state))
    })
}

// Sieve-SGD.

#[no_mangle]
pub unsafe extern "C" fn fsgd_sieve_new(
    p: usize,
    include_intercept: bool,
    omega: f64,
    out: *mut *mut FsgdSieve,
) -> FsgdStatus {
    guard(|| {
        let state = SieveState::new(p, include_intercept, BasisFamily::trigonometric(), omega)?;
        put_handle(out, FsgdSieve(state))
    })
}

#[no_mangle]
pub unsafe extern "C" fn fsgd_sieve_free(sieve: *mut FsgdSieve) {
    if !sieve.is_null() {
        drop(Box::from_raw(sieve));
    }
}

#[no_mangle]
pub unsafe extern "C" fn fsgd_sieve_step(
    sieve: *mut FsgdSieve,
    schedule: *const FsgdSchedule,
    x: *const f64,
    p: usize,
    y: f64,
) -> FsgdStatus {
    guard(|| {
        let sv = get_mut(sieve, "sieve")?;
        let sch = get(schedule, "schedule")?;
        let at = sch.0.at(sv.0.step_count() + 1);
        sv.0.step(&sample(slice(x, p, "x")?, y)?, at.gamma, at.trunc, &SquaredLoss)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn fsgd_sieve_predict(sieve: *const FsgdSieve, x: *const f64, p: usize, out: *mut f64) -> FsgdStatus {
    guard(|| {
        let sv = get(sieve, "sieve")?;
        put(out, sv.0.average().predict(slice(x, p, "x")?)?, "out")
    })
}

/// Copies the averaged model into a new model handle.
#[no_mangle]
pub unsafe extern "C" fn fsgd_sieve_average(sieve: *const FsgdSieve, out: *mut *mut FsgdModel) -> FsgdStatus {
    guard(|| {
        let sv = get(sieve, "sieve")?;
        put_handle(out, FsgdModel(sv.0.average().clone()))
    })
}
