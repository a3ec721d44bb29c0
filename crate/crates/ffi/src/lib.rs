//! C ABI over `car-lab`: opaque handles, status codes, a thread-local last
//! error message and heap strings released with `car_lab_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use car_lab::fredholm::charge_index;
use car_lab::mode_space::{schwinger_of, winding_number, HalfSpace, LoopFunction, ModeWindow, TrigPoly};
use car_lab::report::{run_suite, SuiteRun};
use car_lab::{LabConfig, LabError};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CarLabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    InsufficientWindow = 5,
    NotUnimodular = 6,
    IndeterminateRank = 7,
    NotStabilized = 8,
    UnknownSuite = 9,
    Numerical = 10,
    Panic = 11,
}

impl From<&LabError> for CarLabStatus {
    fn from(e: &LabError) -> Self {
        match e {
            LabError::InvalidArgument(_) | LabError::SupportUndeclared | LabError::NotSweepable(_) => Self::InvalidArgument,
            LabError::InsufficientWindow { .. } | LabError::MarginExhausted { .. } | LabError::DimensionCap { .. } => {
                Self::InsufficientWindow
            }
            LabError::NotUnimodular { .. } | LabError::LiftFailed { .. } => Self::NotUnimodular,
            LabError::IndeterminateRank { .. } => Self::IndeterminateRank,
            LabError::NotStabilized { .. } => Self::NotStabilized,
            LabError::UnknownSuite(_) => Self::UnknownSuite,
            LabError::Json(_) | LabError::Config(_) | LabError::Io(_) => Self::Parse,
            _ => Self::Numerical,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(e: LabError) -> CarLabStatus {
    let status = CarLabStatus::from(&e);
    set_error(e.to_string());
    status
}

/// Runs `f`, turning panics into `Panic`.
fn guard(f: impl FnOnce() -> CarLabStatus) -> CarLabStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("panic inside car-lab");
            CarLabStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, CarLabStatus> {
    if s.is_null() {
        set_error("null string argument");
        return Err(CarLabStatus::NullPointer);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        CarLabStatus::InvalidUtf8
    })
}

fn parse<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, CarLabStatus> {
    serde_json::from_str(s).map_err(|e| fail(LabError::Json(e)))
}

/// Message of the last failed call on this thread, or null. Owned by the
/// library and valid until the next call.
#[no_mangle]
pub extern "C" fn car_lab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn car_lab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// A loop `ζ^w e^{ih}` on the circle.
pub struct CarLabLoop(LoopFunction);

/// Parses `{"winding": w, "h": [[k, re, im], ...]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn car_lab_loop_from_json(json: *const c_char, out: *mut *mut CarLabLoop) -> CarLabStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return CarLabStatus::NullPointer;
        }
        let f = match read_str(json).and_then(parse::<LoopFunction>) {
            Ok(f) => f,
            Err(s) => return s,
        };
        *out = Box::into_raw(Box::new(CarLabLoop(f)));
        CarLabStatus::Ok
    })
}

/// `ζ ↦ ζ^winding`.
#[no_mangle]
pub extern "C" fn car_lab_loop_monomial(winding: i64) -> *mut CarLabLoop {
    Box::into_raw(Box::new(CarLabLoop(LoopFunction::monomial(winding))))
}

/// # Safety
/// `f` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn car_lab_loop_free(f: *mut CarLabLoop) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Winding number by argument lifting.
///
/// # Safety
/// `f` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn car_lab_loop_winding(f: *const CarLabLoop, out: *mut i64) -> CarLabStatus {
    guard(|| {
        if f.is_null() || out.is_null() {
            set_error("null pointer argument");
            return CarLabStatus::NullPointer;
        }
        match winding_number(&(*f).0) {
            Ok(w) => {
                *out = w;
                CarLabStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CarLabIndexReport {
    pub kernel_dim: usize,
    pub cokernel_dim: usize,
    /// `dim coker − dim ker` of the compression to the nonnegative modes.
    pub q: i64,
    /// Same value at all three windows tried.
    pub stable: bool,
    /// Smallest window used.
    pub window: usize,
}

/// Charge index of the multiplication operator of `f`. `window = 0` picks
/// a default from the bandwidth.
///
/// # Safety
/// `f` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn car_lab_charge_index(f: *const CarLabLoop, window: usize, out: *mut CarLabIndexReport) -> CarLabStatus {
    guard(|| {
        if f.is_null() || out.is_null() {
            set_error("null pointer argument");
            return CarLabStatus::NullPointer;
        }
        let w = if window == 0 {
            None
        } else {
            match ModeWindow::new(window) {
                Ok(w) => Some(w),
                Err(e) => return fail(e),
            }
        };
        match charge_index(&(*f).0, HalfSpace::nonnegative(), w) {
            Ok(r) => {
                *out = CarLabIndexReport {
                    kernel_dim: r.kernel_dim,
                    cokernel_dim: r.cokernel_dim,
                    q: r.q,
                    stable: r.stable,
                    window: r.windows[0],
                };
                CarLabStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// `s(A, B)` for real zero-mean trigonometric polynomials given as
/// `{"coeffs": [[k, re, im], ...]}`.
///
/// # Safety
/// `a` and `b` must be NUL-terminated strings and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn car_lab_schwinger_form(a: *const c_char, b: *const c_char, out: *mut f64) -> CarLabStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return CarLabStatus::NullPointer;
        }
        let (pa, pb) = match (read_str(a).and_then(parse::<TrigPoly>), read_str(b).and_then(parse::<TrigPoly>)) {
            (Ok(x), Ok(y)) => (x, y),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match schwinger_of(&pa, &pb) {
            Ok(s) => {
                *out = s;
                CarLabStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Records of a finished verification suite.
pub struct CarLabSuiteRun(SuiteRun);

/// Runs `index`, `schwinger`, `weyl`, `grading`, `stabilizer` or `all`.
/// `config_json` may be null for defaults.
///
/// # Safety
/// `name` must be a NUL-terminated string, `config_json` null or one, and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn car_lab_run_suite(
    name: *const c_char,
    config_json: *const c_char,
    out: *mut *mut CarLabSuiteRun,
) -> CarLabStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return CarLabStatus::NullPointer;
        }
        let name = match read_str(name) {
            Ok(n) => n,
            Err(s) => return s,
        };
        let config = if config_json.is_null() {
            LabConfig::default()
        } else {
            match read_str(config_json).map(LabConfig::from_json_str) {
                Ok(Ok(c)) => c,
                Ok(Err(e)) => return fail(e),
                Err(s) => return s,
            }
        };
        match run_suite(name, &config) {
            Ok(run) => {
                *out = Box::into_raw(Box::new(CarLabSuiteRun(run)));
                CarLabStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn car_lab_suite_len(run: *const CarLabSuiteRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.records.len())
}

/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn car_lab_suite_all_pass(run: *const CarLabSuiteRun) -> bool {
    run.as_ref().is_some_and(|r| r.0.all_pass())
}

/// JSON-lines rendering; free with `car_lab_string_free`.
///
/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn car_lab_suite_json_lines(run: *const CarLabSuiteRun) -> *mut c_char {
    match run.as_ref() {
        Some(r) => CString::new(r.0.to_json_lines()).map_or(ptr::null_mut(), CString::into_raw),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `run` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn car_lab_suite_free(run: *mut CarLabSuiteRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
