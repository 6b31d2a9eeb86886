use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use darboux_conn::companion::build_companion;
use darboux_conn::coords::forward_map;
use darboux_conn::io::ProblemFile;
use darboux_conn_ffi::*;
use serde_json::Value;

fn problem_text(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name);
    std::fs::read_to_string(p).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(dc_last_error_message()) }.to_string_lossy().into_owned()
}

fn load(text: &str) -> Result<*mut DcProblem, DcStatus> {
    let json = CString::new(text).unwrap();
    let mut h = ptr::null_mut();
    match unsafe { dc_problem_from_json(json.as_ptr(), &mut h) } {
        DcStatus::Ok => Ok(h),
        s => {
            assert!(h.is_null());
            Err(s)
        }
    }
}

fn run(command: &str, input: &str, args: &[&str]) -> (DcStatus, Option<Value>) {
    let command = CString::new(command).unwrap();
    let input = CString::new(input).unwrap();
    let owned: Vec<CString> = args.iter().map(|a| CString::new(*a).unwrap()).collect();
    let ptrs: Vec<*const c_char> = owned.iter().map(|a| a.as_ptr()).collect();
    let mut report = ptr::null_mut();
    let status = unsafe { dc_run_command(command.as_ptr(), input.as_ptr(), ptrs.as_ptr(), ptrs.len(), &mut report) };
    let value = (!report.is_null()).then(|| {
        let v = serde_json::from_str(&unsafe { CStr::from_ptr(report) }.to_string_lossy()).unwrap();
        unsafe { dc_string_free(report) };
        v
    });
    (status, value)
}

#[test]
fn companion_params_match_the_library() {
    for name in ["problem_logarithmic.json", "problem_irregular.json"] {
        let text = problem_text(name);
        let h = load(&text).unwrap();
        let mut comp = ptr::null_mut();
        assert_eq!(unsafe { dc_companion_build(h, &mut comp) }, DcStatus::Ok);
        let mut params = DcCompanionParams::default();
        assert_eq!(unsafe { dc_companion_params(comp, &mut params) }, DcStatus::Ok);

        let p = ProblemFile::from_json(&text).unwrap().problem().unwrap();
        let form = build_companion(&p.curve, &p.spectral, &p.config).unwrap();
        assert_eq!(params.b3, form.b3.into());
        assert_eq!(params.a1, form.params.a1.into());
        assert_eq!(params.b2, form.params.b2.into());

        let mut pts = [DcCanonicalPoint::default(); DC_N_APPARENT];
        assert_eq!(unsafe { dc_forward_map(h, pts.as_mut_ptr()) }, DcStatus::Ok);
        let coords = forward_map(&p.curve, &p.spectral, &p.config).unwrap();
        for (a, b) in pts.iter().zip(&coords.points) {
            assert_eq!(a.p, b.p.into());
            assert_eq!(a.u, b.u.into());
        }
        assert_eq!(last_error(), "");
        unsafe {
            dc_companion_free(comp);
            dc_problem_free(h);
        }
    }
}

#[test]
fn error_codes_are_classified() {
    assert_eq!(load("{ nope").unwrap_err(), DcStatus::InvalidInput);
    assert!(last_error().contains("malformed JSON"));

    let mut off: Value = serde_json::from_str(&problem_text("problem_logarithmic.json")).unwrap();
    off["apparent"][0]["v_branch"] = serde_json::json!([40.0, 3.0]);
    assert_eq!(load(&off.to_string()).unwrap_err(), DcStatus::OffCurve);
    assert!(last_error().contains("off the curve"));

    // zeta_j = 1 + u_j makes the stability determinant vanish
    let mut col: Value = serde_json::from_str(&problem_text("problem_logarithmic.json")).unwrap();
    for p in col["apparent"].as_array_mut().unwrap() {
        p["zeta"] = serde_json::json!([1.0 + p["u"][0].as_f64().unwrap(), p["u"][1].as_f64().unwrap()]);
    }
    let h = load(&col.to_string()).unwrap();
    let mut comp = ptr::null_mut();
    assert_eq!(unsafe { dc_companion_build(h, &mut comp) }, DcStatus::NearSingular);
    assert!(comp.is_null());
    let mut pts = [DcCanonicalPoint::default(); DC_N_APPARENT];
    assert_eq!(unsafe { dc_forward_map(h, pts.as_mut_ptr()) }, DcStatus::NearSingular);
    unsafe { dc_problem_free(h) };
    let (status, report) = run("solve", &col.to_string(), &[]);
    assert_eq!((status, report), (DcStatus::NearSingular, None));
}

#[test]
fn null_pointers_are_rejected() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { dc_problem_from_json(ptr::null(), &mut h) }, DcStatus::NullPointer);
    let json = CString::new("{}").unwrap();
    assert_eq!(unsafe { dc_problem_from_json(json.as_ptr(), ptr::null_mut()) }, DcStatus::NullPointer);
    let mut params = DcCompanionParams::default();
    assert_eq!(unsafe { dc_companion_params(ptr::null(), &mut params) }, DcStatus::NullPointer);
    assert_eq!(unsafe { dc_forward_map(ptr::null(), ptr::null_mut()) }, DcStatus::NullPointer);
    assert!(last_error().contains("null"));
    unsafe {
        dc_problem_free(ptr::null_mut());
        dc_companion_free(ptr::null_mut());
        dc_string_free(ptr::null_mut());
    }
}

#[test]
fn run_command_returns_reports() {
    let text = problem_text("problem_irregular.json");
    let (status, report) = run("coords", &text, &[]);
    assert_eq!(status, DcStatus::Ok);
    let report = report.unwrap();
    assert_eq!(report["command"], "coords");

    let (status, inv) = run("invert", &report.to_string(), &[]);
    assert_eq!(status, DcStatus::Ok);
    assert_eq!(inv.unwrap()["pass"], Value::Bool(true));

    // a failed check still yields the report
    let (status, report) = run("coords", &text, &["--tol", "1e-300"]);
    assert_eq!(status, DcStatus::VerificationFailed);
    assert_eq!(report.unwrap()["pass"], Value::Bool(false));

    let a = run("symp-check", &text, &["--pairs", "2", "--seed", "5"]);
    let b = run("symp-check", &text, &["--pairs", "2", "--seed", "5"]);
    assert_eq!(a.0, DcStatus::Ok);
    assert_eq!(a.1, b.1);

    assert_eq!(run("frobnicate", &text, &[]).0, DcStatus::InvalidInput);
    assert_eq!(run("solve", &text, &["--output", "x.json"]).0, DcStatus::InvalidInput);
}

/// Compiles a C program against the generated header and the static library.
#[test]
fn c_program_links_against_the_static_library() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    // tests run from <target>/<profile>/deps; the static library sits one level up
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap();
    assert!(lib_dir.join("libdarboux_conn_ffi.a").exists(), "static library not found in {}", lib_dir.display());
    let out = tempfile::tempdir().unwrap();
    let bin = out.path().join("smoke");
    let status = std::process::Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(lib_dir.join("libdarboux_conn_ffi.a"))
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let data = manifest.join("../core/tests/data/problem_logarithmic.json");
    let run = std::process::Command::new(&bin).arg(data).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "{stdout}{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout.contains("status 0"), "{stdout}");
}
