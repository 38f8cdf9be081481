use std::ffi::{CStr, CString};
use std::ptr;

use translab_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(tl_last_error()) }.to_str().unwrap().to_string()
}

#[test]
fn special_functions_and_errors() {
    let mut v = 0.0;
    assert_eq!(unsafe { tl_bessel_k0(1.0, &mut v) }, TlStatus::Ok);
    assert!((v - 0.421_024_438_240_708_3).abs() < 1e-15);
    assert!(last_error().is_empty());

    let mut untouched = 7.0;
    assert_eq!(unsafe { tl_bessel_k0(-1.0, &mut untouched) }, TlStatus::Domain);
    assert_eq!(untouched, 7.0);
    assert!(last_error().contains("bessel"), "{}", last_error());

    assert_eq!(unsafe { tl_expint_ei(-1.0, &mut v) }, TlStatus::Ok);
    assert!((v + 0.219_383_934_395_520_3).abs() < 1e-14);
    assert_eq!(unsafe { tl_bessel_i0(1.0, ptr::null_mut()) }, TlStatus::NullPointer);
}

#[test]
fn trace_handles() {
    let json = CString::new(r#"{"pieces":[{"segment":{"type":"Step","x0":0.0,"c_left":0.0,"c_right":1.0}}]}"#).unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { tl_trace_from_json(json.as_ptr(), &mut t) }, TlStatus::Ok);
    assert!(!t.is_null());

    let mut v = 0.0;
    assert_eq!(unsafe { tl_trace_eval(t, 2.0, &mut v) }, TlStatus::Ok);
    assert_eq!(v, 1.0);
    assert_eq!(unsafe { tl_poisson_duffin(t, 0.0, 0.0, -1e4, &mut v) }, TlStatus::Ok);
    assert!((v - 0.5).abs() < 5e-2);
    assert_eq!(unsafe { tl_heat_convolve(t, 0.0, 3.0, &mut v) }, TlStatus::Ok);
    assert!((v - 0.5).abs() < 1e-12);
    assert_eq!(unsafe { tl_heat_convolve(t, 0.0, -1.0, &mut v) }, TlStatus::Domain);
    unsafe { tl_trace_free(t) };

    let mut s = ptr::null_mut();
    assert_eq!(unsafe { tl_trace_step(0.0, -1.0, 1.0, &mut s) }, TlStatus::Ok);
    assert_eq!(unsafe { tl_trace_eval(s, -3.0, &mut v) }, TlStatus::Ok);
    assert_eq!(v, -1.0);
    unsafe { tl_trace_free(s) };
    unsafe { tl_trace_free(ptr::null_mut()) };

    let bad = CString::new("{not json").unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { tl_trace_from_json(bad.as_ptr(), &mut t) }, TlStatus::Json);
    assert!(t.is_null());
    assert_eq!(unsafe { tl_trace_eval(ptr::null(), 0.0, &mut v) }, TlStatus::NullPointer);
}

#[test]
fn solve_plane_grid_function() {
    let cfg = CString::new(r#"{"h": 0.5, "data": {"kind": "plane", "a": 0.5, "b": 1.0}}"#).unwrap();
    let mut gf = ptr::null_mut();
    assert_eq!(unsafe { tl_solve(cfg.as_ptr(), &mut gf) }, TlStatus::Ok, "{}", last_error());
    let (mut nx2, mut nx3, mut h) = (0usize, 0usize, 0.0);
    assert_eq!(unsafe { tl_grid_function_shape(gf, &mut nx2, &mut nx3, &mut h) }, TlStatus::Ok);
    assert_eq!((nx2, nx3, h), (17, 17, 0.5));

    let mut v = 0.0;
    assert_eq!(unsafe { tl_grid_function_interpolate(gf, 1.0, 0.25, &mut v) }, TlStatus::Ok);
    assert!((v - 1.5).abs() < 1e-12, "{v}");
    assert_eq!(unsafe { tl_grid_function_value(gf, 8, 8, &mut v) }, TlStatus::Ok);
    assert!((v - 1.0).abs() < 1e-12, "{v}");
    assert_eq!(unsafe { tl_grid_function_value(gf, 99, 0, &mut v) }, TlStatus::Domain);
    assert_eq!(unsafe { tl_grid_function_interpolate(gf, 50.0, 0.0, &mut v) }, TlStatus::Domain);
    unsafe { tl_grid_function_free(gf) };

    let bad = CString::new(r#"{"unknown": 1}"#).unwrap();
    let mut gf = ptr::null_mut();
    assert_eq!(unsafe { tl_solve(bad.as_ptr(), &mut gf) }, TlStatus::Json);
}

#[test]
fn run_experiment_returns_report() {
    let name = CString::new("limit-configuration").unwrap();
    let mut out = ptr::null_mut();
    let mut passed = -1;
    assert_eq!(unsafe { tl_run_experiment(name.as_ptr(), ptr::null(), &mut out, &mut passed) }, TlStatus::Ok);
    assert_eq!(passed, 1);
    let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
    unsafe { tl_string_free(out) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["name"], "limit-configuration");

    let cfg = CString::new(r#"{"n_random": 3}"#).unwrap();
    assert_eq!(unsafe { tl_run_experiment(name.as_ptr(), cfg.as_ptr(), &mut out, &mut passed) }, TlStatus::Ok);
    unsafe { tl_string_free(out) };

    let unknown = CString::new("nope").unwrap();
    assert_eq!(unsafe { tl_run_experiment(unknown.as_ptr(), ptr::null(), &mut out, &mut passed) }, TlStatus::Config);
    assert!(last_error().contains("nope"));
}

#[test]
fn version_and_invalid_utf8() {
    let v = unsafe { CStr::from_ptr(tl_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let bytes = [0xffu8, 0xfe, 0];
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { tl_trace_from_json(bytes.as_ptr().cast(), &mut t) }, TlStatus::InvalidUtf8);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/translab.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let names: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(names.len() > 20);
    for n in names {
        assert!(header.contains(&format!("{n}(")), "{n} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let Ok(out) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", "-I", dir, "-"])
        .stdin(std::process::Stdio::piped())
        .spawn()
        .and_then(|mut child| {
            use std::io::Write;
            child.stdin.take().unwrap().write_all(b"#include \"translab.h\"\nint main(void) { double v; return tl_bessel_k0(1.0, &v) != TL_STATUS_OK; }\n")?;
            child.wait_with_output()
        })
    else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(out.status.success());
}
