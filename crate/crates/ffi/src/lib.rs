//! C ABI over `sepsaddle`.
//!
//! Every function returns a [`SepStatus`]. On failure a message is available
//! from [`sep_last_error_message`] on the same thread until the next call.
//! Handles are opaque and must be released with their `_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sepsaddle::analysis;
use sepsaddle::data::{self, Dataset};
use sepsaddle::experiment::{self, VerifyOptions};
use sepsaddle::solver::{compute_sigma, compute_tau, compute_theta};
use sepsaddle::{Error, LossKind, SaddleProblem, SolverConfig, TraceRecord, Variant};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SepStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Parse = 4,
    NonFinite = 5,
    TooLarge = 6,
    Numerical = 7,
    Io = 8,
    Utf8 = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SepLoss {
    Ridge = 0,
    SmoothHinge = 1,
    Logistic = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SepVariant {
    Adaspdc = 0,
    Spdc = 1,
    Pdcp = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SepSolverConfig {
    pub variant: SepVariant,
    pub m: usize,
    pub max_passes: f64,
    pub seed: u64,
    pub trace_stride: f64,
    pub newton_iters: usize,
    /// 0 disables periodic recomputation.
    pub r_recompute_interval: u64,
    pub record_time: bool,
}

/// Unavailable values (no reference, first record's theta) are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SepTraceRecord {
    pub pass: f64,
    pub objective: f64,
    pub suboptimality: f64,
    pub elapsed_ms: f64,
    pub seed: u64,
    pub iteration: u64,
    pub theta: f64,
}

pub struct SepDataset(Dataset);

pub struct SepTrace {
    records: Vec<TraceRecord>,
    x: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SepStatus {
    match err {
        Error::InvalidArgument(_) => SepStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => SepStatus::DimensionMismatch,
        Error::Parse { .. } => SepStatus::Parse,
        Error::NonFinite { .. } => SepStatus::NonFinite,
        Error::TooLarge { .. } => SepStatus::TooLarge,
        Error::Numerical(_) => SepStatus::Numerical,
        Error::Io(_) => SepStatus::Io,
    }
}

struct Fail(SepStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SepStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SepStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SepStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SepStatus::Panic
        }
    }
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn in_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

impl From<SepLoss> for LossKind {
    fn from(l: SepLoss) -> Self {
        match l {
            SepLoss::Ridge => LossKind::Quadratic,
            SepLoss::SmoothHinge => LossKind::SmoothHinge,
            SepLoss::Logistic => LossKind::Logistic,
        }
    }
}

impl From<SepVariant> for Variant {
    fn from(v: SepVariant) -> Self {
        match v {
            SepVariant::Adaspdc => Variant::AdaSpdc,
            SepVariant::Spdc => Variant::Spdc,
            SepVariant::Pdcp => Variant::Pdcp,
        }
    }
}

impl From<&SepSolverConfig> for SolverConfig {
    fn from(c: &SepSolverConfig) -> Self {
        SolverConfig {
            variant: c.variant.into(),
            m: c.m,
            max_passes: c.max_passes,
            seed: c.seed,
            r_recompute_interval: c.r_recompute_interval,
            newton_iters: c.newton_iters,
            trace_stride: c.trace_stride,
            record_time: c.record_time,
        }
    }
}

impl From<&TraceRecord> for SepTraceRecord {
    fn from(r: &TraceRecord) -> Self {
        SepTraceRecord {
            pass: r.pass,
            objective: r.objective,
            suboptimality: r.suboptimality.unwrap_or(f64::NAN),
            elapsed_ms: r.elapsed_ms,
            seed: r.seed,
            iteration: r.iteration,
            theta: r.theta.unwrap_or(f64::NAN),
        }
    }
}

/// Message for the last failed call on this thread, or null after a
/// successful one. Owned by the library.
#[no_mangle]
pub extern "C" fn sep_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn sep_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn sep_solver_config_default(variant: SepVariant) -> SepSolverConfig {
    let d = SolverConfig::default();
    SepSolverConfig {
        variant,
        m: d.m,
        max_passes: d.max_passes,
        seed: d.seed,
        trace_stride: d.trace_stride,
        newton_iters: d.newton_iters,
        r_recompute_interval: d.r_recompute_interval,
        record_time: d.record_time,
    }
}

fn emit_dataset(ds: Dataset, out: &mut *mut SepDataset) {
    *out = Box::into_raw(Box::new(SepDataset(ds)));
}

#[no_mangle]
pub unsafe extern "C" fn sep_dataset_synthetic(n: usize, d: usize, seed: u64, out: *mut *mut SepDataset) -> SepStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        emit_dataset(data::generate_synthetic(n, d, seed)?, out);
        Ok(())
    })
}

/// `dim = 0` infers the feature dimension from the file.
#[no_mangle]
pub unsafe extern "C" fn sep_dataset_load_libsvm(path: *const c_char, dim: usize, out: *mut *mut SepDataset) -> SepStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|e| Fail(SepStatus::Utf8, e.to_string()))?;
        emit_dataset(data::load_libsvm(path, (dim > 0).then_some(dim))?, out);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sep_dataset_add_bias(dataset: *const SepDataset, out: *mut *mut SepDataset) -> SepStatus {
    guard(|| {
        let ds = in_ref(dataset, "dataset")?;
        let out = out_ptr(out, "out")?;
        emit_dataset(data::add_bias(&ds.0)?, out);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sep_dataset_dims(dataset: *const SepDataset, n: *mut usize, d: *mut usize) -> SepStatus {
    guard(|| {
        let ds = in_ref(dataset, "dataset")?;
        *out_ptr(n, "n")? = ds.0.n();
        *out_ptr(d, "d")? = ds.0.d();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sep_dataset_free(dataset: *mut SepDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Runs a solver from zero. `reference_objective` may be NaN for none. On a
/// run failure `out` still receives the records produced before it.
#[no_mangle]
pub unsafe extern "C" fn sep_run(
    dataset: *const SepDataset,
    loss: SepLoss,
    lambda: f64,
    config: *const SepSolverConfig,
    reference_objective: f64,
    out: *mut *mut SepTrace,
) -> SepStatus {
    guard(|| {
        let ds = in_ref(dataset, "dataset")?;
        let config: SolverConfig = in_ref(config, "config")?.into();
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let problem = SaddleProblem::new(loss.into(), ds.0.labels.clone(), lambda)?;
        let reference = (!reference_objective.is_nan()).then_some(reference_objective);
        match sepsaddle::run(&problem, &ds.0.matrix, &config, reference) {
            Ok(o) => {
                *out = Box::into_raw(Box::new(SepTrace {
                    records: o.trace,
                    x: o.state.x,
                }));
                Ok(())
            }
            Err(f) => {
                let err = Fail::from(f.error);
                *out = Box::into_raw(Box::new(SepTrace {
                    records: f.trace,
                    x: Vec::new(),
                }));
                Err(err)
            }
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn sep_trace_len(trace: *const SepTrace, len: *mut usize) -> SepStatus {
    guard(|| {
        *out_ptr(len, "len")? = in_ref(trace, "trace")?.records.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sep_trace_get(trace: *const SepTrace, index: usize, out: *mut SepTraceRecord) -> SepStatus {
    guard(|| {
        let t = in_ref(trace, "trace")?;
        let r = t.records.get(index).ok_or_else(|| {
            Fail(
                SepStatus::InvalidArgument,
                format!("record {index} out of range (len {})", t.records.len()),
            )
        })?;
        *out_ptr(out, "out")? = r.into();
        Ok(())
    })
}

/// Copies the final primal iterate into `buf` of length `len`, which must
/// equal the feature dimension. Empty for failed runs.
#[no_mangle]
pub unsafe extern "C" fn sep_trace_solution(trace: *const SepTrace, buf: *mut f64, len: usize) -> SepStatus {
    guard(|| {
        let t = in_ref(trace, "trace")?;
        Error::check_len("solution buffer", t.x.len(), len)?;
        if len > 0 {
            if buf.is_null() {
                return Err(null("buf"));
            }
            std::slice::from_raw_parts_mut(buf, len).copy_from_slice(&t.x);
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sep_trace_free(trace: *mut SepTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Closed-form ridge optimum. `x_buf` may be null when `x_len` is 0;
/// otherwise `x_len` must equal the feature dimension.
#[no_mangle]
pub unsafe extern "C" fn sep_ridge_reference(
    dataset: *const SepDataset,
    lambda: f64,
    objective: *mut f64,
    x_buf: *mut f64,
    x_len: usize,
) -> SepStatus {
    guard(|| {
        let ds = in_ref(dataset, "dataset")?;
        let objective = out_ptr(objective, "objective")?;
        if x_len != 0 && x_len != ds.0.d() {
            Error::check_len("x buffer", ds.0.d(), x_len)?;
        }
        let s = analysis::ridge_exact_solution(&ds.0.matrix, &ds.0.labels, lambda)?;
        *objective = s.objective;
        if x_len > 0 {
            if x_buf.is_null() {
                return Err(null("x_buf"));
            }
            std::slice::from_raw_parts_mut(x_buf, x_len).copy_from_slice(&s.x);
        }
        Ok(())
    })
}

/// Runs the numerical theory checks; `violations` receives the total count.
#[no_mangle]
pub unsafe extern "C" fn sep_verify(trials: usize, seed: u64, corrupt_theta: bool, violations: *mut usize) -> SepStatus {
    guard(|| {
        let violations = out_ptr(violations, "violations")?;
        let report = experiment::verify(&VerifyOptions {
            trials,
            seed,
            corrupt_theta,
            ..Default::default()
        })?;
        *violations = report.violations();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sep_compute_sigma(r: f64, n: usize, m: usize, lambda: f64, gamma: f64, out: *mut f64) -> SepStatus {
    guard(|| {
        *out_ptr(out, "out")? = compute_sigma(r, n, m, lambda, gamma)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sep_compute_tau(r_max: f64, n: usize, m: usize, lambda: f64, gamma: f64, out: *mut f64) -> SepStatus {
    guard(|| {
        *out_ptr(out, "out")? = compute_tau(r_max, n, m, lambda, gamma)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sep_compute_theta(r_max: f64, n: usize, m: usize, lambda: f64, gamma: f64, out: *mut f64) -> SepStatus {
    guard(|| {
        *out_ptr(out, "out")? = compute_theta(r_max, n, m, lambda, gamma)?;
        Ok(())
    })
}
