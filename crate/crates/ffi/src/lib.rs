//! C ABI over `crnflux`.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `_free` function. Every fallible call returns a
//! `CrnfluxStatus`. On failure, `crnflux_last_error_message` returns a
//! description that stays valid until the next call on the same thread.
//! Array outputs use caller buffers with a capacity and a written/required
//! count.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use crnflux::cycles::enumerate_cycles;
use crnflux::model::{validate_hypotheses, ValidationMode};
use crnflux::reaction_cycles::ClassFluxTable;
use crnflux::{
    aggregate, build_generator, enumerate_states, flux_table, parse_crn, CrnSpec, Error, FluxOptions, FluxTable,
    StateSpace, XMode, DEFAULT_MAX_CYCLES,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrnfluxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    UnboundedStateSpace = 4,
    EmptyStateSpace = 5,
    AmbiguousEdge = 6,
    CycleBudgetExceeded = 7,
    SingularDenominator = 8,
    MissingLabel = 9,
    ClosureViolation = 10,
    AbsorbingState = 11,
    Assignment = 12,
    InvalidArgument = 13,
    Io = 14,
    Json = 15,
    OutOfRange = 16,
    BufferTooSmall = 17,
    Panic = 18,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrnfluxXMode {
    FallingFactorial = 0,
    Concentration = 1,
}

/// A parsed reaction network.
pub struct CrnfluxNetwork {
    spec: CrnSpec,
}

/// State space, cycles, fluxes and class fluxes of one network at one
/// system size.
pub struct CrnfluxAnalysis {
    space: StateSpace,
    fluxes: FluxTable,
    classes: ClassFluxTable,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> CrnfluxStatus {
    match e {
        Error::Parse(_) => CrnfluxStatus::Parse,
        Error::UnboundedStateSpace(_) => CrnfluxStatus::UnboundedStateSpace,
        Error::EmptyStateSpace => CrnfluxStatus::EmptyStateSpace,
        Error::AmbiguousEdge { .. } => CrnfluxStatus::AmbiguousEdge,
        Error::CycleBudgetExceeded(_) => CrnfluxStatus::CycleBudgetExceeded,
        Error::SingularDenominator(_) => CrnfluxStatus::SingularDenominator,
        Error::MissingLabel(_) => CrnfluxStatus::MissingLabel,
        Error::ClosureViolation { .. } => CrnfluxStatus::ClosureViolation,
        Error::AbsorbingState(_) => CrnfluxStatus::AbsorbingState,
        Error::Assignment(_) => CrnfluxStatus::Assignment,
        Error::Invalid(_) => CrnfluxStatus::InvalidArgument,
        Error::Io(_) => CrnfluxStatus::Io,
        Error::Json(_) => CrnfluxStatus::Json,
    }
}

struct Fail(CrnfluxStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> CrnfluxStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CrnfluxStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CrnfluxStatus::Panic
        }
    }
}

fn null() -> Fail {
    Fail(CrnfluxStatus::NullPointer, "null pointer argument".into())
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(null)
}

unsafe fn write<T>(p: *mut T, v: T) -> Result<(), Fail> {
    if p.is_null() {
        return Err(null());
    }
    p.write(v);
    Ok(())
}

/// Copies `src` into `buf` when it fits; `required` always receives the
/// length.
unsafe fn fill<T: Copy>(src: &[T], buf: *mut T, cap: usize, required: *mut usize) -> Result<(), Fail> {
    write(required, src.len())?;
    if src.len() > cap {
        return Err(Fail(
            CrnfluxStatus::BufferTooSmall,
            format!("buffer holds {cap} entries, {} required", src.len()),
        ));
    }
    if !src.is_empty() {
        if buf.is_null() {
            return Err(null());
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    Ok(())
}

fn index<T>(items: &[T], i: usize) -> Result<&T, Fail> {
    items
        .get(i)
        .ok_or_else(|| Fail(CrnfluxStatus::OutOfRange, format!("index {i} out of range 0..{}", items.len())))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn crnflux_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after success
/// except for a failed `crnflux_network_validate`.
#[no_mangle]
pub extern "C" fn crnflux_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a network description.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crnflux_network_parse(text: *const c_char, out: *mut *mut CrnfluxNetwork) -> CrnfluxStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return Err(null());
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| Fail(CrnfluxStatus::InvalidUtf8, e.to_string()))?;
        let spec = parse_crn(text).map_err(Error::from)?;
        write(out, Box::into_raw(Box::new(CrnfluxNetwork { spec })))
    })
}

/// # Safety
/// `net` must be null or a handle from `crnflux_network_parse` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn crnflux_network_free(net: *mut CrnfluxNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Internal species, external species and reaction counts.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn crnflux_network_dims(
    net: *const CrnfluxNetwork,
    n_internal: *mut usize,
    n_external: *mut usize,
    n_reactions: *mut usize,
) -> CrnfluxStatus {
    guard(|| {
        let spec = &deref(net)?.spec;
        write(n_internal, spec.n_internal())?;
        write(n_external, spec.n_external())?;
        write(n_reactions, spec.n_reactions())
    })
}

/// Checks the network hypotheses; `passed` receives the verdict. On a
/// failed check the violations are left in the last error message.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn crnflux_network_validate(
    net: *const CrnfluxNetwork,
    strict: bool,
    exchange_shape: bool,
    passed: *mut bool,
) -> CrnfluxStatus {
    guard(|| {
        let spec = &deref(net)?.spec;
        let mode = if strict { ValidationMode::Strict } else { ValidationMode::Faithful };
        let report = validate_hypotheses(spec, mode, exchange_shape);
        if !report.passed() {
            let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
            set_error(msgs.join("; "));
        }
        write(passed, report.passed())
    })
}

/// Enumerates states and cycles and computes all fluxes.
///
/// `omega <= 0` uses the value from the network file, `max_cycle_len == 0`
/// means unbounded and `max_cycles == 0` the default budget.
///
/// # Safety
/// `net` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn crnflux_analysis_new(
    net: *const CrnfluxNetwork,
    omega: f64,
    x_mode: CrnfluxXMode,
    max_cycle_len: usize,
    max_cycles: usize,
    out: *mut *mut CrnfluxAnalysis,
) -> CrnfluxStatus {
    guard(|| {
        let spec = &deref(net)?.spec;
        if out.is_null() {
            return Err(null());
        }
        let omega = if omega > 0.0 { omega } else { spec.omega };
        let x_mode = match x_mode {
            CrnfluxXMode::FallingFactorial => XMode::FallingFactorial,
            CrnfluxXMode::Concentration => XMode::Concentration,
        };
        let space = enumerate_states(spec)?;
        let gen = build_generator(spec, &space, omega, x_mode)?;
        let cycles = enumerate_cycles(
            &gen,
            if max_cycle_len == 0 { usize::MAX } else { max_cycle_len },
            if max_cycles == 0 { DEFAULT_MAX_CYCLES } else { max_cycles },
        )?;
        let fluxes = flux_table(&gen, &cycles, FluxOptions::default())?;
        let classes = aggregate(&fluxes, &spec.stoich_matrices().xi_y)?;
        write(out, Box::into_raw(Box::new(CrnfluxAnalysis { space, fluxes, classes })))
    })
}

/// # Safety
/// `a` must be null or a handle from `crnflux_analysis_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn crnflux_analysis_free(a: *mut CrnfluxAnalysis) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn crnflux_analysis_n_states(a: *const CrnfluxAnalysis, n: *mut usize) -> CrnfluxStatus {
    guard(|| write(n, deref(a)?.space.len()))
}

/// Copy numbers of state `i`; `required` receives the species count.
///
/// # Safety
/// `a` and `required` must be valid; `buf` must hold `cap` entries.
#[no_mangle]
pub unsafe extern "C" fn crnflux_analysis_state(
    a: *const CrnfluxAnalysis,
    i: usize,
    buf: *mut u64,
    cap: usize,
    required: *mut usize,
) -> CrnfluxStatus {
    guard(|| {
        let a = deref(a)?;
        let st = index(a.space.states(), i)?;
        fill(st, buf, cap, required)
    })
}

/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn crnflux_analysis_n_cycles(a: *const CrnfluxAnalysis, n: *mut usize) -> CrnfluxStatus {
    guard(|| write(n, deref(a)?.fluxes.records.len()))
}

/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn crnflux_analysis_cycle_len(a: *const CrnfluxAnalysis, i: usize, len: *mut usize) -> CrnfluxStatus {
    guard(|| write(len, index(&deref(a)?.fluxes.records, i)?.cycle.len()))
}

/// State indices of cycle `i`, smallest first.
///
/// # Safety
/// `a` and `required` must be valid; `buf` must hold `cap` entries.
#[no_mangle]
pub unsafe extern "C" fn crnflux_analysis_cycle_states(
    a: *const CrnfluxAnalysis,
    i: usize,
    buf: *mut usize,
    cap: usize,
    required: *mut usize,
) -> CrnfluxStatus {
    guard(|| fill(&index(&deref(a)?.fluxes.records, i)?.cycle.states, buf, cap, required))
}

/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn crnflux_analysis_cycle_flux(a: *const CrnfluxAnalysis, i: usize, omega: *mut f64) -> CrnfluxStatus {
    guard(|| write(omega, index(&deref(a)?.fluxes.records, i)?.omega))
}

/// Stationary distribution; `required` receives the state count.
///
/// # Safety
/// `a` and `required` must be valid; `buf` must hold `cap` entries.
#[no_mangle]
pub unsafe extern "C" fn crnflux_analysis_stationary(
    a: *const CrnfluxAnalysis,
    buf: *mut f64,
    cap: usize,
    required: *mut usize,
) -> CrnfluxStatus {
    guard(|| fill(&deref(a)?.fluxes.stationary, buf, cap, required))
}

/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn crnflux_analysis_n_classes(a: *const CrnfluxAnalysis, n: *mut usize) -> CrnfluxStatus {
    guard(|| write(n, deref(a)?.classes.classes.len()))
}

/// Net reaction counts of class `i`; `required` receives the reaction count.
///
/// # Safety
/// `a` and `required` must be valid; `buf` must hold `cap` entries.
#[no_mangle]
pub unsafe extern "C" fn crnflux_analysis_class_key(
    a: *const CrnfluxAnalysis,
    i: usize,
    buf: *mut i64,
    cap: usize,
    required: *mut usize,
) -> CrnfluxStatus {
    guard(|| fill(&index(&deref(a)?.classes.classes, i)?.net, buf, cap, required))
}

/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn crnflux_analysis_class_flux(a: *const CrnfluxAnalysis, i: usize, omega: *mut f64) -> CrnfluxStatus {
    guard(|| write(omega, index(&deref(a)?.classes.classes, i)?.omega))
}

/// Flux table as CSV. Free the string with `crnflux_string_free`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn crnflux_analysis_fluxes_csv(a: *const CrnfluxAnalysis, out: *mut *mut c_char) -> CrnfluxStatus {
    guard(|| {
        let csv = crnflux::report::flux_csv(&deref(a)?.fluxes);
        let s = CString::new(csv).map_err(|e| Fail(CrnfluxStatus::InvalidArgument, e.to_string()))?;
        write(out, s.into_raw())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn crnflux_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
