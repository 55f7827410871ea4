use std::ffi::CStr;
use std::ptr;

use latent_ssl_ffi::*;

fn truth() -> LssMixture {
    LssMixture {
        a1: 0.5,
        b1: 0.0,
        b2: 1.5,
        sigma: 1.0,
    }
}

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { lss_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(lss_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn reduces_the_example_truth() {
    let (mut c1, mut c2) = (0.0, 0.0);
    let s = unsafe { lss_reduce_params(&truth(), &mut c1, &mut c2) };
    assert_eq!(s, LssStatus::Ok);
    assert!((c1 - 1.5).abs() < 1e-12);
    assert!((c2 + 1.125).abs() < 1e-12);
}

#[test]
fn null_pointers_are_reported() {
    let mut c1 = 0.0;
    let s = unsafe { lss_reduce_params(ptr::null(), &mut c1, &mut c1) };
    assert_eq!(s, LssStatus::NullPointer);
    assert!(last_error().contains("null"));
    unsafe {
        lss_fisher_free(ptr::null_mut());
        lss_dataset_free(ptr::null_mut());
        lss_posterior_free(ptr::null_mut());
    }
}

#[test]
fn invalid_mixture_is_a_domain_error() {
    let bad = LssMixture { a1: 1.5, ..truth() };
    let mut h = ptr::null_mut();
    let s = unsafe { lss_fisher_new(&bad, &mut h) };
    assert_eq!(s, LssStatus::Domain);
    assert!(h.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn fisher_handle_gives_matrices_and_coefficients() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { lss_fisher_new(&truth(), &mut h) }, LssStatus::Ok);
    let mut m = [0.0; 9];
    let mut dim = 0;
    assert_eq!(
        unsafe { lss_fisher_matrix(h, LssFisherKind::Xy, m.as_mut_ptr(), 9, &mut dim) },
        LssStatus::Ok
    );
    assert_eq!(dim, 3);
    for i in 0..3 {
        for j in 0..3 {
            assert!((m[i * 3 + j] - m[j * 3 + i]).abs() < 1e-12);
        }
    }
    assert_eq!(
        unsafe { lss_fisher_matrix(h, LssFisherKind::X, m.as_mut_ptr(), 4, &mut dim) },
        LssStatus::InvalidArgument
    );
    let mut c = LssCoefficients::default();
    assert_eq!(unsafe { lss_coefficients(h, 0.5, &mut c) }, LssStatus::Ok);
    assert!((c.c1 - 2.0 * 2f64.ln()).abs() < 1e-5);
    assert!(c.c3 < c.c2 && c.c2 < c.c1);
    assert_eq!(unsafe { lss_coefficients(h, 1.5, &mut c) }, LssStatus::Domain);
    unsafe { lss_fisher_free(h) };
}

#[test]
fn dataset_posterior_and_kl_round_trip() {
    let prior = LssPrior {
        mean_scale: 3.0,
        reduced_scale: 3.0,
        ..lss_prior_default()
    };
    let mut d = ptr::null_mut();
    assert_eq!(
        unsafe { lss_dataset_sample(&truth(), 8, 0.5, 3, &mut d) },
        LssStatus::Ok
    );
    let (mut l, mut u) = (0, 0);
    assert_eq!(unsafe { lss_dataset_counts(d, &mut l, &mut u) }, LssStatus::Ok);
    assert_eq!((l, u), (4, 4));
    for model in [LssModel::Model1, LssModel::Model2, LssModel::Model3] {
        let mut p = ptr::null_mut();
        assert_eq!(unsafe { lss_grid_posterior(d, model, &prior, &mut p) }, LssStatus::Ok);
        let mut z = 0.0;
        assert_eq!(unsafe { lss_posterior_log_normalizer(p, &mut z) }, LssStatus::Ok);
        assert!(z.is_finite());
        let mut kl = -1.0;
        assert_eq!(unsafe { lss_kl_error_exact(d, p, &truth(), &mut kl) }, LssStatus::Ok);
        assert!(kl >= -1e-10, "{model:?}: {kl}");
        unsafe { lss_posterior_free(p) };
    }
    unsafe { lss_dataset_free(d) };
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/latent_ssl.h");
    for name in [
        "lss_version",
        "lss_last_error_message",
        "lss_prior_default",
        "lss_reduce_params",
        "lss_fisher_new",
        "lss_fisher_free",
        "lss_fisher_matrix",
        "lss_coefficients",
        "lss_dataset_sample",
        "lss_dataset_free",
        "lss_dataset_counts",
        "lss_grid_posterior",
        "lss_posterior_free",
        "lss_posterior_log_normalizer",
        "lss_kl_error_exact",
        "LSS_STATUS_PANIC",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
