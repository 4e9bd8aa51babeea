use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use quintic_lab_ffi::*;

fn last_error() -> String {
    let p = ql_last_error();
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { ql_string_free(p) };
    s
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(ql_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn field_roundtrip_and_norms() {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(ql_field_zeros(1, &mut f), QlStatus::Ok);
        let mut len = 0usize;
        assert_eq!(ql_field_len(f, &mut len), QlStatus::Ok);
        assert_eq!(len, 27);
        let mut data = vec![0.0; 2 * len];
        // plane wave at n = 0 with amplitude 2
        data[2 * 13] = 2.0;
        assert_eq!(ql_field_set_coefficients(f, data.as_ptr(), data.len()), QlStatus::Ok);
        let mut back = vec![1.0; 2 * len];
        assert_eq!(ql_field_get_coefficients(f, back.as_mut_ptr(), back.len()), QlStatus::Ok);
        assert_eq!(back, data);
        let mut h = 0.0;
        assert_eq!(ql_field_hs_norm(f, 1.0, &mut h), QlStatus::Ok);
        assert!((h - 2.0).abs() < 1e-15);

        let mut q = ptr::null_mut();
        assert_eq!(ql_quintic(f, false, &mut q), QlStatus::Ok);
        let mut qn = 0usize;
        ql_field_n_max(q, &mut qn);
        assert_eq!(qn, 5);
        ql_field_free(q);
        ql_field_free(f);
    }
}

#[test]
fn quintic_routes_agree_and_identity_holds() {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(ql_field_randomized(3, 0.05, 1, &mut f), QlStatus::Ok);
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(ql_quintic(f, false, &mut a), QlStatus::Ok);
        assert_eq!(ql_quintic(f, true, &mut b), QlStatus::Ok);
        let mut len = 0;
        ql_field_len(a, &mut len);
        let mut va = vec![0.0; 2 * len];
        let mut vb = vec![0.0; 2 * len];
        ql_field_get_coefficients(a, va.as_mut_ptr(), va.len());
        ql_field_get_coefficients(b, vb.as_mut_ptr(), vb.len());
        let scale = va.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(va.iter().zip(&vb).all(|(x, y)| (x - y).abs() <= 1e-12 * scale));
        let mut err = 1.0;
        assert_eq!(ql_identity_error(f, &mut err), QlStatus::Ok);
        assert!(err < 1e-12);
        for p in [a, b, f] {
            ql_field_free(p);
        }
    }
}

#[test]
fn errors_map_to_codes() {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(ql_field_randomized(1, 0.5, 2, &mut f), QlStatus::InvalidParameter);
        assert!(last_error().contains("alpha"));
        assert_eq!(ql_field_randomized(1, 0.05, 2, ptr::null_mut()), QlStatus::NullPointer);
        let mut h = 0.0;
        assert_eq!(ql_field_hs_norm(ptr::null(), 1.0, &mut h), QlStatus::NullPointer);
        assert!(last_error().contains("field"));
        let mut z = ptr::null_mut();
        ql_field_zeros(1, &mut z);
        let short = [0.0; 4];
        assert_eq!(ql_field_set_coefficients(z, short.as_ptr(), 4), QlStatus::InvalidParameter);
        ql_field_free(z);
        ql_field_free(ptr::null_mut());
        ql_string_free(ptr::null_mut());
    }
}

#[test]
fn counting_and_variation() {
    unsafe {
        let mut c = 0u64;
        assert_eq!(ql_sphere_count(1, &mut c), QlStatus::Ok);
        assert_eq!(c, 6);
        assert_eq!(ql_sphere_count(3, &mut c), QlStatus::Ok);
        assert_eq!(c, 8);
        // 0 → 1 → 0: one jump up and one down
        let series = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        let mut v = 0.0;
        assert_eq!(ql_vp_norm(series.as_ptr(), 3, 2.0, &mut v), QlStatus::Ok);
        assert!((v - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(ql_vp_norm(series.as_ptr(), 3, 0.5, &mut v), QlStatus::InvalidParameter);
    }
}

#[test]
fn run_config_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = serde_json::json!({
        "seed": 2,
        "output_dir": dir.path(),
        "command": {"counting": {"family": "sphere", "max_r2": 200}}
    });
    let text = CString::new(cfg.to_string()).unwrap();
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(ql_run_config(text.as_ptr(), &mut out), QlStatus::Ok);
        let paths: Vec<String> = serde_json::from_str(CStr::from_ptr(out).to_str().unwrap()).unwrap();
        ql_string_free(out);
        assert_eq!(paths.len(), 1);
        assert!(PathBuf::from(&paths[0]).exists());

        let bad = CString::new(r#"{"command": {"counting": {"nope": 1}}}"#).unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(ql_run_config(bad.as_ptr(), &mut out), QlStatus::Format);
        assert!(out.is_null());
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/quintic_lab.h")).unwrap();
    for name in [
        "ql_version",
        "ql_last_error",
        "ql_string_free",
        "ql_field_zeros",
        "ql_field_randomized",
        "ql_field_free",
        "ql_field_n_max",
        "ql_field_len",
        "ql_field_get_coefficients",
        "ql_field_set_coefficients",
        "ql_field_hs_norm",
        "ql_quintic",
        "ql_identity_error",
        "ql_sphere_count",
        "ql_vp_norm",
        "ql_run_config",
        "typedef struct QlField QlField",
        "QL_STATUS_NULL_POINTER = 9",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c_when_a_compiler_exists() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/quintic_lab.h");
    let Ok(out) = std::process::Command::new("cc").args(["-fsyntax-only", "-std=c11", "-x", "c", header]).output() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
