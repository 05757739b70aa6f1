use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use reldev_ffi::*;

fn last_error() -> String {
    let p = reldev_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn bound_by_id() {
    let id = CString::new("cor7").unwrap();
    let req = CString::new(r#"{"params":{"m":1000,"epsilon":0.1},"capacity":{"kind":"expected_shatter","value":8}}"#)
        .unwrap();
    let mut value = 0.0;
    let mut vacuous = true;
    let s = unsafe { reldev_bound_evaluate(id.as_ptr(), req.as_ptr(), &mut value, &mut vacuous) };
    assert_eq!(s, ReldevStatus::Ok);
    assert!((value - 4.443e-10).abs() / 4.443e-10 < 1e-3);
    assert!(!vacuous);

    let mut json = ptr::null_mut();
    let s = unsafe { reldev_bound_evaluate_json(id.as_ptr(), req.as_ptr(), &mut json) };
    assert_eq!(s, ReldevStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { reldev_string_free(json) };
    assert!(text.contains("\"id\":\"cor7\""), "{text}");
}

#[test]
fn errors_map_to_status() {
    let psi = CString::new("psi").unwrap();
    let req = CString::new(r#"{"params":{"alpha":2.0}}"#).unwrap();
    let mut value = 0.0;
    let s = unsafe { reldev_bound_evaluate(psi.as_ptr(), req.as_ptr(), &mut value, ptr::null_mut()) };
    assert_eq!(s, ReldevStatus::Domain);
    assert!(last_error().contains("alpha must exceed 2"));

    let bad = CString::new("nope").unwrap();
    let s = unsafe { reldev_bound_evaluate(bad.as_ptr(), ptr::null(), &mut value, ptr::null_mut()) };
    assert_eq!(s, ReldevStatus::Validation);

    let s = unsafe { reldev_bound_evaluate(ptr::null(), ptr::null(), &mut value, ptr::null_mut()) };
    assert_eq!(s, ReldevStatus::NullPointer);

    let junk = CString::new("{").unwrap();
    let s = unsafe { reldev_bound_evaluate(psi.as_ptr(), junk.as_ptr(), &mut value, ptr::null_mut()) };
    assert_eq!(s, ReldevStatus::Parse);

    let s = unsafe { reldev_binomial_tail_geq_mean(0, 0.5, &mut value) };
    assert_eq!(s, ReldevStatus::Domain);
}

#[test]
fn binomial_values() {
    let mut v = 0.0;
    assert_eq!(unsafe { reldev_binomial_tail_geq_mean(2, 0.5, &mut v) }, ReldevStatus::Ok);
    assert!((v - 0.75).abs() < 1e-15);
    assert_eq!(unsafe { reldev_binomial_pmf(4, 0.5, 2, &mut v) }, ReldevStatus::Ok);
    assert!((v - 0.375).abs() < 1e-14);
    assert_eq!(unsafe { reldev_binomial_tail_leq_mean(10, 0.3, &mut v) }, ReldevStatus::Ok);
    assert!(v > 0.25);
}

#[test]
fn table_handle() {
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { reldev_table_thresholds(10, &mut t) }, ReldevStatus::Ok);
    let (mut g, mut d, mut n) = (0u64, 0usize, 0usize);
    unsafe {
        assert_eq!(reldev_table_growth(t, 5, &mut g), ReldevStatus::Ok);
        assert_eq!(reldev_table_vc_dimension(t, &mut d), ReldevStatus::Ok);
        assert_eq!(reldev_table_len(t, &mut n), ReldevStatus::Ok);
        let sample = [0usize, 3, 99];
        assert_eq!(reldev_table_shatter(t, sample.as_ptr(), 3, &mut g), ReldevStatus::Domain);
        reldev_table_free(t);
    }
    assert_eq!((d, n), (1, 11));

    let labels: Vec<u8> = (0u8..16).flat_map(|r| (0..4).map(move |b| (r >> b) & 1)).collect();
    let mut full = ptr::null_mut();
    unsafe {
        assert_eq!(reldev_table_new(labels.as_ptr(), 16, 4, &mut full), ReldevStatus::Ok);
        assert_eq!(reldev_table_vc_dimension(full, &mut d), ReldevStatus::Ok);
        reldev_table_free(full);
        reldev_table_free(ptr::null_mut());
    }
    assert_eq!(d, 4);
}

#[test]
fn experiment_handle() {
    let config = CString::new(
        r#"{"scenario":{"kind":"threshold_line","points":8},"statistic":"one_sided_emp_minus_true",
            "alpha":2.0,"tau":0.01,"epsilon_grid":[0.3,0.6],"m":100,"trials":200,"master_seed":9}"#,
    )
    .unwrap();
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { reldev_experiment_run(config.as_ptr(), &mut r) }, ReldevStatus::Ok);
    let mut rows = 0usize;
    let mut row = ReldevRow::default();
    let mut failed = true;
    unsafe {
        assert_eq!(reldev_report_row_count(r, &mut rows), ReldevStatus::Ok);
        assert_eq!(reldev_report_row(r, 1, &mut row), ReldevStatus::Ok);
        assert_eq!(reldev_report_row(r, 2, &mut row), ReldevStatus::OutOfRange);
        assert_eq!(reldev_report_has_failure(r, &mut failed), ReldevStatus::Ok);
        let mut json = ptr::null_mut();
        assert_eq!(reldev_report_to_json(r, &mut json), ReldevStatus::Ok);
        assert!(CStr::from_ptr(json).to_str().unwrap().contains("\"rows\""));
        reldev_string_free(json);
        reldev_report_free(r);
    }
    assert_eq!(rows, 2);
    assert_eq!(row.epsilon, 0.6);
    assert_eq!(row.trials, 200);
    assert!(!failed);

    let short = CString::new(
        r#"{"scenario":{"kind":"threshold_line","points":8},"statistic":"one_sided_emp_minus_true",
            "alpha":2.0,"epsilon_grid":[0.3],"m":100,"trials":10,"master_seed":9}"#,
    )
    .unwrap();
    assert_eq!(unsafe { reldev_experiment_run(short.as_ptr(), &mut r) }, ReldevStatus::Validation);
    assert!(last_error().contains("trials >= 100"));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "reldev.h"

int main(void) {
    double v = 0.0;
    bool vac = true;
    const char *req = "{\"params\":{\"m\":1000,\"epsilon\":0.1},\"capacity\":{\"kind\":\"expected_shatter\",\"value\":8}}";
    if (reldev_bound_evaluate("cor7", req, &v, &vac) != RELDEV_STATUS_OK) return 1;
    if (vac || v < 4.4e-10 || v > 4.5e-10) return 2;
    if (reldev_bound_evaluate("psi", "{\"params\":{\"alpha\":2}}", &v, NULL) != RELDEV_STATUS_DOMAIN) return 3;
    if (strstr(reldev_last_error(), "alpha must exceed 2") == NULL) return 4;
    ReldevTable *t = NULL;
    size_t d = 0;
    if (reldev_table_thresholds(10, &t) != RELDEV_STATUS_OK) return 5;
    if (reldev_table_vc_dimension(t, &d) != RELDEV_STATUS_OK || d != 1) return 6;
    reldev_table_free(t);
    printf("ok %s\n", reldev_version());
    return 0;
}
"#;

/// Compiles a C client against the generated header and the static library.
#[test]
fn c_client_links_against_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    assert!(header_dir.join("reldev.h").exists());
    // test binaries live in <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libreldev_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping C client: static library or C compiler unavailable");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    let bin = dir.path().join("client");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-I")
        .arg(&header_dir)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C client failed to compile");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C client exited with {:?}", out.status);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
