//! C interface to `darboux_conn`.
//!
//! Every fallible function returns a [`DcStatus`]; on failure a message is
//! available from [`dc_last_error_message`] on the same thread. Handles are
//! opaque and owned by the caller, who frees them with the matching
//! `*_free` function. Strings returned by the library are freed with
//! [`dc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use clap::Parser;
use darboux_conn::cli::{execute, Cli, CliError};
use darboux_conn::companion::{build_companion, CompanionError, CompanionForm, N_APPARENT};
use darboux_conn::coords::{forward_map, CoordsError};
use darboux_conn::curve::CurveError;
use darboux_conn::io::{InputError, Problem, ProblemFile};
use darboux_conn::numeric::{Complex, NumericError};
use darboux_conn::spectral::SpectralError;
use darboux_conn::symplectic::SymplecticError;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DcStatus {
    Ok = 0,
    /// The computation ran but a check did not pass.
    VerificationFailed = 1,
    InvalidInput = 2,
    NearSingular = 3,
    OffCurve = 4,
    NullPointer = 5,
    /// A panic or other unexpected failure inside the library.
    Internal = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DcComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex> for DcComplex {
    fn from(z: Complex) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// Residue parameters and accessory parameters of a companion form.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DcCompanionParams {
    pub a1: DcComplex,
    pub a2: DcComplex,
    pub a3: DcComplex,
    pub a4: DcComplex,
    pub b1: DcComplex,
    pub b2: DcComplex,
    pub b3: DcComplex,
}

/// One canonical coordinate pair `(q_j, p_j)` with `q_j = (u, v)`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DcCanonicalPoint {
    pub u: DcComplex,
    pub v: DcComplex,
    pub p: DcComplex,
}

/// Number of apparent singularities, and of canonical coordinate pairs.
pub const DC_N_APPARENT: usize = 3;
const _: () = assert!(DC_N_APPARENT == N_APPARENT);

/// A parsed and validated problem.
pub struct DcProblem(Problem);

/// A solved companion form.
pub struct DcCompanion(CompanionForm);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(status: DcStatus, msg: impl Into<String>) -> DcStatus {
    set_error(msg);
    status
}

/// Runs `f`, clearing the error message first and turning panics into
/// [`DcStatus::Internal`].
fn guard(f: impl FnOnce() -> DcStatus) -> DcStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(DcStatus::Internal, format!("internal error: {msg}"))
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, DcStatus> {
    if s.is_null() {
        return Err(fail(DcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s).to_str().map_err(|e| fail(DcStatus::InvalidInput, format!("{what} is not UTF-8: {e}")))
}

fn numeric_status(e: &NumericError) -> DcStatus {
    match e {
        NumericError::NearSingular { .. } => DcStatus::NearSingular,
        _ => DcStatus::InvalidInput,
    }
}

fn curve_status(e: &CurveError) -> DcStatus {
    match e {
        CurveError::OffCurve { .. } => DcStatus::OffCurve,
        CurveError::Numeric(n) => numeric_status(n),
        _ => DcStatus::InvalidInput,
    }
}

fn spectral_status(e: &SpectralError) -> DcStatus {
    match e {
        SpectralError::Curve(c) => curve_status(c),
        SpectralError::Numeric(n) => numeric_status(n),
        _ => DcStatus::InvalidInput,
    }
}

fn companion_status(e: &CompanionError) -> DcStatus {
    match e {
        CompanionError::NearSingular { .. } => DcStatus::NearSingular,
        CompanionError::InvariantViolated { .. } => DcStatus::VerificationFailed,
        CompanionError::Curve(c) => curve_status(c),
        CompanionError::Spectral(s) => spectral_status(s),
        CompanionError::Numeric(n) => numeric_status(n),
        CompanionError::InvalidConfig(_) => DcStatus::InvalidInput,
    }
}

fn input_status(e: &InputError) -> DcStatus {
    match e {
        InputError::Curve(c) => curve_status(c),
        InputError::Spectral(s) => spectral_status(s),
        InputError::Companion(c) => companion_status(c),
        _ => DcStatus::InvalidInput,
    }
}

fn coords_status(e: &CoordsError) -> DcStatus {
    match e {
        CoordsError::NearSingular { .. } => DcStatus::NearSingular,
        CoordsError::Disagreement { .. } | CoordsError::Atlas(_) => DcStatus::VerificationFailed,
        CoordsError::Companion(c) => companion_status(c),
        CoordsError::Curve(c) => curve_status(c),
        CoordsError::Spectral(s) => spectral_status(s),
        CoordsError::Numeric(n) => numeric_status(n),
        CoordsError::InvalidCoords(_) => DcStatus::InvalidInput,
    }
}

fn cli_status(e: &CliError) -> DcStatus {
    match e {
        CliError::Input(i) => input_status(i),
        CliError::Companion(c) => companion_status(c),
        CliError::Coords(c) => coords_status(c),
        CliError::Symplectic(SymplecticError::Companion(c)) => companion_status(c),
        CliError::Symplectic(SymplecticError::Coords(c)) => coords_status(c),
        CliError::Spectral(s) => spectral_status(s),
        CliError::Curve(c) => curve_status(c),
        CliError::Atlas(_) => DcStatus::VerificationFailed,
        _ => DcStatus::InvalidInput,
    }
}

/// Parses a problem file (JSON text) into a new handle stored in `*out`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dc_problem_from_json(json: *const c_char, out: *mut *mut DcProblem) -> DcStatus {
    guard(|| {
        if out.is_null() {
            return fail(DcStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let text = match read_str(json, "json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match ProblemFile::from_json(text).and_then(|f| f.problem()) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(DcProblem(p)));
                DcStatus::Ok
            }
            Err(e) => fail(input_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `problem` must be null or a handle from [`dc_problem_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dc_problem_free(problem: *mut DcProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Solves the companion form of `problem`, checking its residue and
/// apparency conditions.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dc_companion_build(problem: *const DcProblem, out: *mut *mut DcCompanion) -> DcStatus {
    guard(|| {
        if problem.is_null() || out.is_null() {
            return fail(DcStatus::NullPointer, "problem or out is null");
        }
        *out = ptr::null_mut();
        let p = &(*problem).0;
        match build_companion(&p.curve, &p.spectral, &p.config) {
            Ok(form) => {
                *out = Box::into_raw(Box::new(DcCompanion(form)));
                DcStatus::Ok
            }
            Err(e) => fail(companion_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `companion` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dc_companion_params(companion: *const DcCompanion, out: *mut DcCompanionParams) -> DcStatus {
    guard(|| {
        if companion.is_null() || out.is_null() {
            return fail(DcStatus::NullPointer, "companion or out is null");
        }
        let f = &(*companion).0;
        *out = DcCompanionParams {
            a1: f.params.a1.into(),
            a2: f.params.a2.into(),
            a3: f.a3.into(),
            a4: f.a4.into(),
            b1: f.params.b1.into(),
            b2: f.params.b2.into(),
            b3: f.b3.into(),
        };
        DcStatus::Ok
    })
}

/// # Safety
/// `companion` must be null or a handle from [`dc_companion_build`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dc_companion_free(companion: *mut DcCompanion) {
    if !companion.is_null() {
        drop(Box::from_raw(companion));
    }
}

/// Computes the canonical coordinates of `problem`, writing
/// [`DC_N_APPARENT`] points to `out`.
///
/// # Safety
/// `problem` must be a live handle and `out` must have room for
/// [`DC_N_APPARENT`] points.
#[no_mangle]
pub unsafe extern "C" fn dc_forward_map(problem: *const DcProblem, out: *mut DcCanonicalPoint) -> DcStatus {
    guard(|| {
        if problem.is_null() || out.is_null() {
            return fail(DcStatus::NullPointer, "problem or out is null");
        }
        let p = &(*problem).0;
        match forward_map(&p.curve, &p.spectral, &p.config) {
            Ok(coords) => {
                let out = std::slice::from_raw_parts_mut(out, N_APPARENT);
                for (o, c) in out.iter_mut().zip(&coords.points) {
                    *o = DcCanonicalPoint { u: c.u.into(), v: c.v.into(), p: c.p.into() };
                }
                DcStatus::Ok
            }
            Err(e) => fail(coords_status(&e), e.to_string()),
        }
    })
}

/// Runs a CLI command (`solve`, `verify`, `coords`, `invert`, `symp-check`)
/// on the JSON text `input`. `args` holds `n_args` extra flags, e.g.
/// `"--seed", "7"`. The report is stored in `*report` (free with
/// [`dc_string_free`]) both when every check passes and when one fails,
/// in which case the status is [`DcStatus::VerificationFailed`].
///
/// # Safety
/// `command` and `input` must be NUL-terminated strings, `args` must point
/// to `n_args` such strings (or be null when `n_args` is 0), and `report`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dc_run_command(
    command: *const c_char,
    input: *const c_char,
    args: *const *const c_char,
    n_args: usize,
    report: *mut *mut c_char,
) -> DcStatus {
    guard(|| {
        if report.is_null() {
            return fail(DcStatus::NullPointer, "report is null");
        }
        *report = ptr::null_mut();
        if args.is_null() && n_args > 0 {
            return fail(DcStatus::NullPointer, "args is null");
        }
        let command = match read_str(command, "command") {
            Ok(c) => c,
            Err(s) => return s,
        };
        let input = match read_str(input, "input") {
            Ok(c) => c,
            Err(s) => return s,
        };
        // the input is passed in memory; the path is a placeholder for clap
        let mut argv = vec!["darboux-conn", command, "--input", "-"];
        for i in 0..n_args {
            match read_str(*args.add(i), "argument") {
                Ok(a) => argv.push(a),
                Err(s) => return s,
            }
        }
        let cli = match Cli::try_parse_from(&argv) {
            Ok(c) => c,
            Err(e) => return fail(DcStatus::InvalidInput, e.to_string()),
        };
        if cli.command.io().output.is_some() {
            return fail(DcStatus::InvalidInput, "--output is not supported here; the report is returned");
        }
        match execute(&cli.command, input, None) {
            Ok(outcome) => {
                let Ok(text) = CString::new(outcome.report) else {
                    return fail(DcStatus::Internal, "report contains a NUL byte");
                };
                *report = text.into_raw();
                if outcome.pass {
                    DcStatus::Ok
                } else {
                    fail(DcStatus::VerificationFailed, "one or more checks failed; see the report")
                }
            }
            Err(e) => fail(cli_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failure on this thread; empty after a success. The
/// pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn dc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
