use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use scrforge_ffi::*;

const W: [f64; 4] = [0.3, 0.1, -0.2, 0.4];
const V: [f64; 2] = [0.5, -0.25];
const A: [f64; 2] = [1.0, 0.5];

fn reservoir() -> *mut ScrReservoir {
    let mut r = ptr::null_mut();
    let st = unsafe { scr_reservoir_new(2, 1, 1, W.as_ptr(), V.as_ptr(), A.as_ptr(), 1.0, &mut r) };
    assert_eq!(st, ScrStatus::Ok);
    r
}

fn last_error() -> String {
    let p = scr_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn run_matches_recursion() {
    let r = reservoir();
    let inputs = [1.0, -0.5, 0.25];
    let mut out = [0.0; 3];
    assert_eq!(
        unsafe { scr_reservoir_run(r, inputs.as_ptr(), 3, 0, out.as_mut_ptr(), 3) },
        ScrStatus::Ok
    );
    // x1 = V u0; x2 = W x1 + V u1; y = A x
    let x1 = [0.5, -0.25];
    let x2 = [0.3 * x1[0] + 0.1 * x1[1] - 0.25, -0.2 * x1[0] + 0.4 * x1[1] + 0.125];
    assert!((out[0] - (x1[0] + 0.5 * x1[1])).abs() < 1e-15);
    assert!((out[1] - (x2[0] + 0.5 * x2[1])).abs() < 1e-15);
    unsafe { scr_reservoir_free(r) };
}

#[test]
fn error_codes_and_messages() {
    let mut r = ptr::null_mut();
    let big = [2.0, 0.0, 0.0, 2.0];
    let st = unsafe { scr_reservoir_new(2, 1, 1, big.as_ptr(), V.as_ptr(), A.as_ptr(), 1.0, &mut r) };
    assert_eq!(st, ScrStatus::InvalidInput);
    assert!(last_error().contains("not below 1"));
    assert!(r.is_null());

    let st = unsafe { scr_reservoir_new(2, 1, 1, ptr::null(), V.as_ptr(), A.as_ptr(), 1.0, &mut r) };
    assert_eq!(st, ScrStatus::NullPointer);

    let r = reservoir();
    assert!(scr_last_error().is_null());
    let mut out = [0.0; 1];
    let inputs = [0.1, 0.2];
    let st = unsafe { scr_reservoir_run(r, inputs.as_ptr(), 2, 0, out.as_mut_ptr(), 1) };
    assert_eq!(st, ScrStatus::BufferTooSmall);
    let loud = [3.0, 0.0];
    let st = unsafe { scr_reservoir_run(r, loud.as_ptr(), 2, 1, out.as_mut_ptr(), 1) };
    assert_eq!(st, ScrStatus::InvalidInput);

    let path = CString::new("/nonexistent/system").unwrap();
    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { scr_reservoir_load(path.as_ptr(), &mut loaded) }, ScrStatus::Io);
    unsafe {
        scr_reservoir_free(r);
        scr_reservoir_free(ptr::null_mut());
    }
}

#[test]
fn approximate_and_round_trip() {
    let r = reservoir();
    let (mut sys, mut rep) = (ptr::null_mut(), ptr::null_mut());
    let st = unsafe { scr_approximate(r, 0.3, 4, 200, 1, &mut sys, &mut rep) };
    assert_eq!(st, ScrStatus::Ok, "{}", last_error());

    let (mut n_scr, mut m, mut d, mut lambda) = (0usize, 0usize, 0usize, 0.0);
    assert_eq!(unsafe { scr_system_dims(sys, &mut n_scr, &mut m, &mut d, &mut lambda) }, ScrStatus::Ok);
    let mut lam_r = 0.0;
    unsafe { scr_reservoir_dims(r, ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), &mut lam_r) };
    assert_eq!((m, d), (1, 1));
    assert_eq!(lambda, lam_r);

    let mut signs = vec![0i8; n_scr];
    assert_eq!(unsafe { scr_system_signs(sys, signs.as_mut_ptr(), n_scr) }, ScrStatus::Ok);
    assert!(signs.iter().all(|s| *s == 1 || *s == -1));
    let mut readout = vec![0.0; n_scr];
    assert_eq!(unsafe { scr_system_readout(sys, readout.as_mut_ptr(), n_scr) }, ScrStatus::Ok);

    let mut gap = 0.0;
    let key = CString::new("empirical_output_gap").unwrap();
    assert_eq!(unsafe { scr_report_get(rep, key.as_ptr(), &mut gap) }, ScrStatus::Ok);
    assert!(gap < 0.3);
    let bad = CString::new("no_such_key").unwrap();
    assert_eq!(unsafe { scr_report_get(rep, bad.as_ptr(), &mut gap) }, ScrStatus::InvalidInput);

    let mut needed = 0usize;
    assert_eq!(
        unsafe { scr_report_text(rep, ptr::null_mut(), 0, &mut needed) },
        ScrStatus::BufferTooSmall
    );
    let mut buf = vec![0 as std::ffi::c_char; needed];
    assert_eq!(unsafe { scr_report_text(rep, buf.as_mut_ptr(), needed, &mut needed) }, ScrStatus::Ok);
    let text = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy();
    assert!(text.contains("n_scr = "));

    // Both systems driven through the C ABI stay within ε.
    let inputs: Vec<f64> = (0..300).map(|t| ((t as f64) * 0.37).sin()).collect();
    let mut y_r = vec![0.0; 300];
    let mut y_s = vec![0.0; 300];
    unsafe {
        assert_eq!(scr_reservoir_run(r, inputs.as_ptr(), 300, 0, y_r.as_mut_ptr(), 300), ScrStatus::Ok);
        assert_eq!(scr_system_run(sys, inputs.as_ptr(), 300, 0, y_s.as_mut_ptr(), 300), ScrStatus::Ok);
    }
    assert!(y_r.iter().zip(&y_s).all(|(a, b)| (a - b).abs() < 0.3));

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().to_str().unwrap()).unwrap();
    assert_eq!(unsafe { scr_system_save(sys, path.as_ptr()) }, ScrStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { scr_system_load(path.as_ptr(), &mut back) }, ScrStatus::Ok);
    let mut signs_back = vec![0i8; n_scr];
    unsafe { scr_system_signs(back, signs_back.as_mut_ptr(), n_scr) };
    assert_eq!(signs, signs_back);

    unsafe {
        scr_system_free(back);
        scr_system_free(sys);
        scr_report_free(rep);
        scr_reservoir_free(r);
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/scrforge.h")).unwrap();
    for name in [
        "scr_last_error",
        "scr_reservoir_new",
        "scr_reservoir_run",
        "scr_approximate",
        "scr_system_signs",
        "scr_report_get",
        "typedef struct ScrSystem ScrSystem",
        "SCR_STATUS_BUFFER_TOO_SMALL = 6",
    ] {
        assert!(header.contains(name), "{name}");
    }
}

/// Directory holding the static library built alongside this test.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_static_library() {
    let lib = artifact_dir().join("libscrforge_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "scrforge.h"
int main(void) {
    double w[4] = {0.3, 0.1, -0.2, 0.4}, v[2] = {0.5, -0.25}, a[2] = {1.0, 0.5};
    ScrReservoir *r = NULL;
    if (scr_reservoir_new(2, 1, 1, w, v, a, 1.0, &r) != SCR_STATUS_OK) return 1;
    double u[2] = {1.0, 0.0}, y[2];
    if (scr_reservoir_run(r, u, 2, 0, y, 2) != SCR_STATUS_OK) return 2;
    ScrReservoir *bad = NULL;
    double big[4] = {2.0, 0.0, 0.0, 2.0};
    if (scr_reservoir_new(2, 1, 1, big, v, a, 1.0, &bad) != SCR_STATUS_INVALID_INPUT) return 3;
    if (scr_last_error() == NULL) return 4;
    printf("%.6f %.6f\n", y[0], y[1]);
    scr_reservoir_free(r);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("smoke");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    // y0 = A V = 0.375, y1 = A W V = 0.125 - 0.1 = 0.0375 + ...
    let text = String::from_utf8(out.stdout).unwrap();
    let vals: Vec<f64> = text.split_whitespace().map(|s| s.parse().unwrap()).collect();
    assert!((vals[0] - 0.375).abs() < 1e-6);
    let wv = [0.3 * 0.5 - 0.1 * 0.25, -0.2 * 0.5 - 0.4 * 0.25];
    assert!((vals[1] - (wv[0] + 0.5 * wv[1])).abs() < 1e-6);
}
