use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use csk_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe {
        csk_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn design_label_simulate_round() {
    unsafe {
        let mut spec = ptr::null_mut();
        assert_eq!(csk_spec_new(CskProfile::Balanced, &mut spec), CskStatus::Ok);
        assert_eq!(csk_spec_set_restarts(spec, 10, 1), CskStatus::Ok);
        let mut c = ptr::null_mut();
        assert_eq!(csk_design(spec, CskEqualizer::None, 0.0, &mut c), CskStatus::Ok);
        let med = csk_constellation_med(c);
        assert!(med > 7.0 && med < 7.3, "{med}");
        assert!(csk_constellation_t_star(c) <= med * med + 1e-6);

        let (mut n, mut d) = (0usize, 0usize);
        assert_eq!(csk_constellation_shape(c, &mut n, &mut d), CskStatus::Ok);
        assert_eq!((n, d), (8, 3));
        let mut pts = vec![0.0; n * d];
        assert_eq!(csk_constellation_points(c, pts.as_mut_ptr(), 5), CskStatus::BufferTooSmall);
        assert!(last_error().contains("need 24"));
        assert_eq!(csk_constellation_points(c, pts.as_mut_ptr(), pts.len()), CskStatus::Ok);
        let mean_red: f64 = pts.chunks(3).map(|p| p[0]).sum::<f64>() / 8.0;
        assert!((mean_red - 10.0 / 3.0).abs() < 1e-6);

        let mut l = ptr::null_mut();
        assert_eq!(csk_label(c, 5.0, 10.0, 10, 1, &mut l), CskStatus::Ok);
        let mut words = [0u32; 8];
        assert_eq!(csk_labeling_words(l, words.as_mut_ptr(), 8), CskStatus::Ok);
        let mut sorted = words;
        sorted.sort();
        assert_eq!(sorted, [0, 1, 2, 3, 4, 5, 6, 7]);
        assert!(csk_labeling_cost(l) > 0.0);

        let mut p = CskBerPoint::default();
        assert_eq!(
            csk_simulate(c, l, CskEqualizer::None, 60.0, 30_000, 3, 10.0, &mut p),
            CskStatus::Ok
        );
        assert_eq!(p.bit_errors, 0);
        assert_eq!(
            csk_simulate(c, l, CskEqualizer::None, 5.0, 30_000, 3, 10.0, &mut p),
            CskStatus::Ok
        );
        assert!(p.ber > 0.01 && p.ber < 0.2);
        assert_eq!(
            csk_simulate(c, l, CskEqualizer::SvdPre, 5.0, 30_000, 3, 10.0, &mut p),
            CskStatus::InvalidInput
        );

        csk_labeling_free(l);
        csk_constellation_free(c);
        csk_spec_free(spec);
    }
}

#[test]
fn svd_pre_design_goes_through() {
    unsafe {
        let mut spec = ptr::null_mut();
        assert_eq!(csk_spec_new(CskProfile::Extreme, &mut spec), CskStatus::Ok);
        assert_eq!(csk_spec_set_restarts(spec, 5, 2), CskStatus::Ok);
        let mut c = ptr::null_mut();
        assert_eq!(csk_design(spec, CskEqualizer::SvdPre, 0.1, &mut c), CskStatus::Ok);
        let mut l = ptr::null_mut();
        assert_eq!(csk_label(c, 5.0, 10.0, 2, 1, &mut l), CskStatus::Ok);
        let mut p = CskBerPoint::default();
        assert_eq!(
            csk_simulate(c, l, CskEqualizer::SvdPre, 40.0, 3_000, 1, 10.0, &mut p),
            CskStatus::Ok
        );
        assert_eq!(p.symbol_errors, 0);
        csk_labeling_free(l);
        csk_constellation_free(c);
        csk_spec_free(spec);
    }
}

#[test]
fn error_codes() {
    unsafe {
        assert_eq!(csk_spec_set_papr(ptr::null_mut(), 2.0), CskStatus::NullPointer);
        assert_eq!(last_error(), "null handle");
        assert_eq!(csk_spec_new(CskProfile::Balanced, ptr::null_mut()), CskStatus::NullPointer);

        let mut spec = ptr::null_mut();
        csk_spec_new(CskProfile::Balanced, &mut spec);
        assert_eq!(csk_spec_set_papr(spec, 0.5), CskStatus::InvalidInput);
        assert_eq!(csk_spec_set_color(spec, 0.5, 0.5, 0.5), CskStatus::InvalidInput);
        assert!(last_error().contains("sum to 1"));
        assert_eq!(csk_spec_set_restarts(spec, 0, 1), CskStatus::InvalidInput);
        let mut c = ptr::null_mut();
        assert_eq!(csk_design(spec, CskEqualizer::SvdPre, 0.7, &mut c), CskStatus::InvalidInput);
        assert!(c.is_null());
        csk_spec_free(spec);

        let negative = [-1.0, 0.0, 1.0, 1.0];
        assert_eq!(
            csk_constellation_from_points(negative.as_ptr(), 2, 2, &mut c),
            CskStatus::InvalidDomain
        );
        let ok = [0.0, 0.0, 3.0, 4.0];
        assert_eq!(csk_constellation_from_points(ok.as_ptr(), 2, 2, &mut c), CskStatus::Ok);
        assert_eq!(csk_constellation_med(c), 5.0);
        csk_constellation_free(c);

        assert!(csk_constellation_med(ptr::null()).is_nan());
        csk_constellation_free(ptr::null_mut());
        csk_labeling_free(ptr::null_mut());
        assert_eq!(csk_last_error_message(ptr::null_mut(), 0), last_error().len());
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(csk_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/csk.h")).unwrap();
    for name in [
        "csk_spec_new",
        "csk_spec_free",
        "csk_design",
        "csk_constellation_points",
        "csk_label",
        "csk_simulate",
        "csk_last_error_message",
        "typedef struct CskSpec CskSpec",
        "CSK_STATUS_BUFFER_TOO_SMALL = 7",
    ] {
        assert!(header.contains(name), "{name} missing from csk.h");
    }
}

fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?;
    let lib = dir.join("libcsk_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_program_links_against_header() {
    let lib = static_lib().expect("libcsk_ffi.a next to the test binary");
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "csk.h"
int main(void) {
    CskSpec *spec = NULL;
    CskConstellation *c = NULL;
    if (csk_spec_new(CSK_PROFILE_BALANCED, &spec) != CSK_STATUS_OK) return 1;
    if (csk_spec_set_restarts(spec, 4, 1) != CSK_STATUS_OK) return 2;
    if (csk_design(spec, CSK_EQUALIZER_NONE, 0.0, &c) != CSK_STATUS_OK) return 3;
    if (csk_design(NULL, CSK_EQUALIZER_NONE, 0.0, &c) != CSK_STATUS_NULL_POINTER) return 4;
    printf("%.4f\n", csk_constellation_med(c));
    csk_constellation_free(c);
    csk_spec_free(spec);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = tmp.path().join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    let med: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!(med > 6.5, "{med}");
}
