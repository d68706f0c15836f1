use std::ffi::{CStr, CString};
use std::ptr;

use sos_ffi::*;

fn model(len: usize, m: u32, beta: f64, measure: SosMeasure) -> *mut SosModel {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { sos_model_new(len, m, beta, measure, &mut h) }, SosStatus::Ok);
    assert!(!h.is_null());
    h
}

fn last_error() -> String {
    let p = sos_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn weights_and_rates_match_hand_values() {
    let beta = 1.3;
    let m = model(3, 2, beta, SosMeasure::Constrained);
    let mut w = 0.0;
    let bump = [0, 1, 0];
    assert_eq!(unsafe { sos_log_weight(m, bump.as_ptr(), 3, &mut w) }, SosStatus::Ok);
    assert!((w + 2.0 * beta).abs() < 1e-12);
    let flat = [0, 0, 0];
    let mut rate = 0.0;
    assert_eq!(unsafe { sos_jump_rate(m, flat.as_ptr(), 3, 2, 1, &mut rate) }, SosStatus::Ok);
    // square root of the weight ratio e^{-2 beta}
    assert!((rate - (-beta).exp()).abs() < 1e-12);
    let top = [2, 2, 2];
    assert_eq!(unsafe { sos_jump_rate(m, top.as_ptr(), 3, 1, 1, &mut rate) }, SosStatus::Ok);
    assert_eq!(rate, 0.0);
    unsafe { sos_model_free(m) };
}

#[test]
fn three_state_path_has_unit_gap() {
    let m = model(1, 1, 2.0, SosMeasure::Constrained);
    let mut gap = 0.0;
    assert_eq!(unsafe { sos_spectral_gap(m, 0, &mut gap) }, SosStatus::Ok);
    assert!((gap - 1.0).abs() < 1e-12, "{gap}");
    unsafe { sos_model_free(m) };
}

#[test]
fn runs_are_reproducible() {
    let m = model(4, 2, 1.0, SosMeasure::Constrained);
    let start = [0; 4];
    let (mut a, mut b) = ([0i32; 4], [0i32; 4]);
    let (mut ja, mut jb) = (0u64, 0u64);
    unsafe {
        assert_eq!(sos_simulate(m, start.as_ptr(), 4, 50.0, 3, a.as_mut_ptr(), &mut ja), SosStatus::Ok);
        assert_eq!(sos_simulate(m, start.as_ptr(), 4, 50.0, 3, b.as_mut_ptr(), &mut jb), SosStatus::Ok);
    }
    assert_eq!((a, ja), (b, jb));
    assert!(ja > 0 && a.iter().all(|h| h.abs() <= 2));

    let (mut t, mut c) = (0.0, true);
    assert_eq!(unsafe { sos_exit_time(m, start.as_ptr(), 4, 1e6, 9, &mut t, &mut c) }, SosStatus::Ok);
    assert!(!c && t > 0.0);
    let (mut t2, mut c2) = (0.0, true);
    unsafe { sos_exit_time(m, start.as_ptr(), 4, 1e6, 9, &mut t2, &mut c2) };
    assert_eq!((t, c), (t2, c2));
    unsafe { sos_model_free(m) };
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { sos_model_new(3, 0, 1.0, SosMeasure::Constrained, &mut h) }, SosStatus::InvalidParam);
    assert!(last_error().contains("`M`"));
    assert!(h.is_null());
    assert_eq!(unsafe { sos_model_new(3, 2, 1.0, SosMeasure::Constrained, ptr::null_mut()) }, SosStatus::NullPointer);

    let m = model(3, 2, 1.0, SosMeasure::Constrained);
    let short = [0, 0];
    let mut w = 0.0;
    assert_eq!(unsafe { sos_log_weight(m, short.as_ptr(), 2, &mut w) }, SosStatus::LengthMismatch);
    assert!(last_error().contains("length 2"));
    let flat = [0, 0, 0];
    assert_eq!(unsafe { sos_jump_rate(m, flat.as_ptr(), 3, 4, 1, &mut w) }, SosStatus::InvalidParam);
    assert_eq!(unsafe { sos_jump_rate(m, flat.as_ptr(), 3, 1, 0, &mut w) }, SosStatus::InvalidParam);
    assert_eq!(unsafe { sos_model_set_region(m, 1.5, 0.2) }, SosStatus::InvalidParam);
    assert!(last_error().contains("`eps`"));
    let far = [2, 2, 2];
    let (mut t, mut c) = (0.0, false);
    assert_eq!(unsafe { sos_exit_time(m, far.as_ptr(), 3, 10.0, 1, &mut t, &mut c) }, SosStatus::Precondition);
    let missing = CString::new("/nonexistent/catalog.json").unwrap();
    assert_eq!(unsafe { sos_model_load_catalog(m, missing.as_ptr()) }, SosStatus::Io);
    unsafe { sos_model_free(m) };
    unsafe { sos_model_free(ptr::null_mut()) };
}

#[test]
fn catalog_changes_the_weight() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cat.json");
    std::fs::write(&path, r#"{"decay_mass": 1.0, "shapes": [{"sites": [["1/2", "1/2"]], "weight": 0.04}]}"#).unwrap();
    let m = model(2, 2, 1.0, SosMeasure::Constrained);
    let c = CString::new(path.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { sos_model_load_catalog(m, c.as_ptr()) }, SosStatus::Ok);
    let (mut with, mut without) = (0.0, 0.0);
    let flat = [0, 0];
    unsafe { sos_log_weight(m, flat.as_ptr(), 2, &mut with) };
    let plain = model(2, 2, 1.0, SosMeasure::Constrained);
    unsafe { sos_log_weight(plain, flat.as_ptr(), 2, &mut without) };
    assert!(with != without);
    unsafe {
        sos_model_free(m);
        sos_model_free(plain);
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(sos_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
