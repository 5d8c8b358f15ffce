use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use shadowtomo_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

#[test]
fn sample_estimate_and_free() {
    unsafe {
        let mut snaps = ptr::null_mut();
        let st = shadowtomo_sample(ShadowtomoState::Ghz as u32, 6, 1, 4000, 3, &mut snaps);
        assert_eq!(st, ShadowtomoStatus::Ok);
        assert_eq!(shadowtomo_snapshots_len(snaps), 4000);
        let mut r = ptr::null_mut();
        assert_eq!(
            shadowtomo_reconstruction_closed_form(ShadowtomoClosedForm::DepthOne as u32, 6, &mut r),
            ShadowtomoStatus::Ok
        );
        let mut est = ShadowtomoEstimate::default();
        let p = c("ZZIIII");
        assert_eq!(
            shadowtomo_estimate_pauli(snaps, r, p.as_ptr(), 0, &mut est),
            ShadowtomoStatus::Ok
        );
        assert_eq!(est.samples, 4000);
        assert!((est.estimate - 1.0).abs() < 4.0 * est.std_error, "{est:?}");
        let id = c("IIIIII");
        assert_eq!(
            shadowtomo_estimate_pauli(snaps, r, id.as_ptr(), 0, &mut est),
            ShadowtomoStatus::Ok
        );
        assert_eq!((est.estimate, est.variance), (1.0, 0.0));
        let gens = c("+ZZIIII;+IZZIII;+IIZZII;+IIIZZI;+IIIIZZ;+XXXXXX");
        assert_eq!(
            shadowtomo_estimate_fidelity(snaps, r, gens.as_ptr(), 12, &mut est),
            ShadowtomoStatus::Ok
        );
        assert!((est.estimate - 1.0).abs() < 0.3, "{est:?}");
        let mut v = 0.0;
        assert_eq!(
            shadowtomo_reconstruction_coefficient(r, 0b11, &mut v),
            ShadowtomoStatus::Ok
        );
        assert!((v - 1.25).abs() < 1e-12);
        shadowtomo_reconstruction_free(r);
        shadowtomo_snapshots_free(snaps);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        assert_eq!(
            shadowtomo_sample(0, 4, 0, 10, 0, ptr::null_mut()),
            ShadowtomoStatus::NullPointer
        );
        let msg = CStr::from_ptr(shadowtomo_last_error()).to_str().unwrap();
        assert!(msg.contains("null pointer"), "{msg}");
        let mut snaps = ptr::null_mut();
        assert_eq!(
            shadowtomo_sample(7, 4, 0, 10, 0, &mut snaps),
            ShadowtomoStatus::InvalidArgument
        );
        assert!(snaps.is_null());
        let mut r = ptr::null_mut();
        assert_eq!(
            shadowtomo_reconstruction_closed_form(ShadowtomoClosedForm::DepthOne as u32, 5, &mut r),
            ShadowtomoStatus::InvalidArgument
        );
        let missing = c("/nonexistent/r.txt");
        assert_eq!(
            shadowtomo_reconstruction_read(missing.as_ptr(), &mut r),
            ShadowtomoStatus::Io
        );
        let mut norm = 0.0;
        let bad = c("ZQ");
        assert_eq!(
            shadowtomo_pauli_shadow_norm(bad.as_ptr(), 0, 0, &mut norm),
            ShadowtomoStatus::InvalidArgument
        );
        shadowtomo_snapshots_free(ptr::null_mut());
        shadowtomo_reconstruction_free(ptr::null_mut());
    }
}

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let mut snaps = ptr::null_mut();
        assert_eq!(
            shadowtomo_sample(ShadowtomoState::Cluster as u32, 5, 2, 50, 1, &mut snaps),
            ShadowtomoStatus::Ok
        );
        let sp = c(dir.path().join("s.snap").to_str().unwrap());
        assert_eq!(
            shadowtomo_snapshots_write(snaps, sp.as_ptr()),
            ShadowtomoStatus::Ok
        );
        let mut back = ptr::null_mut();
        assert_eq!(
            shadowtomo_snapshots_read(sp.as_ptr(), &mut back),
            ShadowtomoStatus::Ok
        );
        assert_eq!(shadowtomo_snapshots_len(back), 50);
        let mut r = ptr::null_mut();
        assert_eq!(
            shadowtomo_reconstruction_closed_form(ShadowtomoClosedForm::Global as u32, 5, &mut r),
            ShadowtomoStatus::Ok
        );
        let rp = c(dir.path().join("r.txt").to_str().unwrap());
        assert_eq!(
            shadowtomo_reconstruction_write(r, rp.as_ptr()),
            ShadowtomoStatus::Ok
        );
        let mut r2 = ptr::null_mut();
        assert_eq!(
            shadowtomo_reconstruction_read(rp.as_ptr(), &mut r2),
            ShadowtomoStatus::Ok
        );
        let (mut a, mut b) = (0.0, 0.0);
        shadowtomo_reconstruction_coefficient(r, 31, &mut a);
        shadowtomo_reconstruction_coefficient(r2, 31, &mut b);
        assert_eq!(a, b);
        for h in [snaps, back] {
            shadowtomo_snapshots_free(h);
        }
        shadowtomo_reconstruction_free(r);
        shadowtomo_reconstruction_free(r2);
    }
}

#[test]
fn pauli_norm_matches_closed_form() {
    let p = c("ZZZIIIII");
    let mut norm = 0.0;
    unsafe {
        assert_eq!(
            shadowtomo_pauli_shadow_norm(p.as_ptr(), 0, 0, &mut norm),
            ShadowtomoStatus::Ok
        );
    }
    assert!((norm - 27.0).abs() < 1e-9);
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/shadowtomo.h");
    let text = std::fs::read_to_string(header).unwrap();
    assert!(
        text.contains("shadowtomo_estimate_pauli")
            && text.contains("typedef struct ShadowtomoSnapshots")
    );
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(cc.status.success());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(&src, "#include <stdio.h>\n#include \"shadowtomo.h\"\nint main(void) { ShadowtomoEstimate e; e.std_error = 0; return (int)e.std_error; }\n").unwrap();
    let out = Command::new("cc")
        .args([
            "-std=c99",
            "-Wall",
            "-Werror",
            "-fsyntax-only",
            "-I",
            concat!(env!("CARGO_MANIFEST_DIR"), "/include"),
        ])
        .arg(&src)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
