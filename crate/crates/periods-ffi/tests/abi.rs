//! Drives the C ABI end to end from Rust: every pointer that crosses the
//! boundary here crosses it exactly as a C caller's would.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use periods_ffi::{
    periods_cert_free, periods_cert_parse, periods_cert_to_text, periods_cert_verify,
    periods_chi_free, periods_chi_genus, periods_chi_parse, periods_decide, periods_last_error,
    periods_realize, periods_string_free, periods_version, PeriodsCert, PeriodsChi,
    PeriodsOutcome, PeriodsStatus,
};

const LATTICE_CHI: &str = "genus 2\n(3, 0)\n(0, 1)\n(1, 0)\n(0, 0)\n";
const DEFICIT_CHI: &str = "genus 2\n(2, 0)\n(0, 1)\n(1, 0)\n(0, 0)\n";

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn take_string(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { periods_string_free(p) };
    s
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(periods_last_error()) }
        .to_str()
        .unwrap()
        .to_owned()
}

fn parse_chi(text: &str) -> *mut PeriodsChi {
    let text = cstr(text);
    let mut chi = ptr::null_mut();
    let status = unsafe { periods_chi_parse(text.as_ptr(), &mut chi) };
    assert_eq!(status, PeriodsStatus::Ok, "{}", last_error());
    assert!(!chi.is_null());
    chi
}

#[test]
fn version_is_a_static_string() {
    let v = unsafe { CStr::from_ptr(periods_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn parse_rejects_garbage_with_a_message() {
    let text = cstr("genus 2\n(1, oops)\n");
    let mut chi = ptr::null_mut();
    let status = unsafe { periods_chi_parse(text.as_ptr(), &mut chi) };
    assert_eq!(status, PeriodsStatus::ParseError);
    assert!(chi.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_arguments_are_reported_not_dereferenced() {
    let mut chi = ptr::null_mut();
    assert_eq!(
        unsafe { periods_chi_parse(ptr::null(), &mut chi) },
        PeriodsStatus::NullArgument
    );
    let text = cstr(LATTICE_CHI);
    assert_eq!(
        unsafe { periods_chi_parse(text.as_ptr(), ptr::null_mut()) },
        PeriodsStatus::NullArgument
    );
    let mut outcome = PeriodsOutcome::Realizable;
    let part = cstr("2");
    assert_eq!(
        unsafe { periods_decide(ptr::null(), part.as_ptr(), &mut outcome, ptr::null_mut()) },
        PeriodsStatus::NullArgument
    );
    assert_eq!(unsafe { periods_chi_genus(ptr::null()) }, 0);
    // Frees ignore null entirely.
    unsafe {
        periods_chi_free(ptr::null_mut());
        periods_cert_free(ptr::null_mut());
        periods_string_free(ptr::null_mut());
    }
}

#[test]
fn invalid_utf8_is_its_own_status() {
    let bytes: &[u8] = b"genus 2\n(\xff, 0)\n\0";
    let mut chi = ptr::null_mut();
    let status = unsafe { periods_chi_parse(bytes.as_ptr().cast::<c_char>(), &mut chi) };
    assert_eq!(status, PeriodsStatus::InvalidUtf8);
}

#[test]
fn decide_reports_both_verdicts() {
    let chi = parse_chi(LATTICE_CHI);
    assert_eq!(unsafe { periods_chi_genus(chi) }, 2);

    let part = cstr("2");
    let mut outcome = PeriodsOutcome::Exhausted;
    let mut reason: *mut c_char = ptr::null_mut();
    let status = unsafe { periods_decide(chi, part.as_ptr(), &mut outcome, &mut reason) };
    assert_eq!(status, PeriodsStatus::Ok);
    assert_eq!(outcome, PeriodsOutcome::Realizable);
    assert!(reason.is_null(), "no reason accompanies a positive verdict");
    unsafe { periods_chi_free(chi) };

    let chi = parse_chi(DEFICIT_CHI);
    let mut reason: *mut c_char = ptr::null_mut();
    let status = unsafe { periods_decide(chi, part.as_ptr(), &mut outcome, &mut reason) };
    assert_eq!(status, PeriodsStatus::Ok);
    assert_eq!(outcome, PeriodsOutcome::NotRealizable);
    let reason = take_string(reason);
    assert!(reason.contains("volume"), "reason was: {reason}");
    unsafe { periods_chi_free(chi) };
}

#[test]
fn mismatched_partition_is_a_domain_error() {
    let chi = parse_chi(LATTICE_CHI);
    let part = cstr("1,1,2");
    let mut outcome = PeriodsOutcome::Realizable;
    let status = unsafe { periods_decide(chi, part.as_ptr(), &mut outcome, ptr::null_mut()) };
    assert_eq!(status, PeriodsStatus::DomainError);
    assert!(last_error().contains("genus"));
    unsafe { periods_chi_free(chi) };
}

fn realize_ok(chi: *const PeriodsChi, part: &str, seed: u64) -> *mut PeriodsCert {
    let part = cstr(part);
    let mut outcome = PeriodsOutcome::Exhausted;
    let mut cert = ptr::null_mut();
    let status =
        unsafe { periods_realize(chi, part.as_ptr(), seed, 0, &mut outcome, &mut cert) };
    assert_eq!(status, PeriodsStatus::Ok, "{}", last_error());
    assert_eq!(outcome, PeriodsOutcome::Realizable);
    assert!(!cert.is_null());
    cert
}

#[test]
fn realize_verify_and_text_round_trip() {
    let chi = parse_chi(LATTICE_CHI);
    let cert = realize_ok(chi, "2", 1);
    unsafe { periods_chi_free(chi) };

    let mut valid = false;
    let mut report: *mut c_char = ptr::null_mut();
    let status = unsafe { periods_cert_verify(cert, &mut valid, &mut report) };
    assert_eq!(status, PeriodsStatus::Ok);
    assert!(valid);
    let report = take_string(report);
    assert!(report.contains("verdict: valid"), "report was:\n{report}");

    let mut text: *mut c_char = ptr::null_mut();
    assert_eq!(
        unsafe { periods_cert_to_text(cert, &mut text) },
        PeriodsStatus::Ok
    );
    let text = take_string(text);
    unsafe { periods_cert_free(cert) };

    let ctext = cstr(&text);
    let mut reparsed = ptr::null_mut();
    assert_eq!(
        unsafe { periods_cert_parse(ctext.as_ptr(), &mut reparsed) },
        PeriodsStatus::Ok
    );
    let mut text2: *mut c_char = ptr::null_mut();
    assert_eq!(
        unsafe { periods_cert_to_text(reparsed, &mut text2) },
        PeriodsStatus::Ok
    );
    assert_eq!(take_string(text2), text, "serialization must be stable");
    unsafe { periods_cert_free(reparsed) };
}

#[test]
fn matching_seeds_give_identical_certificates() {
    let dense = "genus 2 d 2\n(2, 1)\n(1, 1)\n(1*sqrt(2), 0)\n(0, 1*sqrt(2))\n";
    let chi = parse_chi(dense);
    let texts: Vec<String> = (0..2)
        .map(|_| {
            let cert = realize_ok(chi, "1,1", 7);
            let mut text: *mut c_char = ptr::null_mut();
            assert_eq!(
                unsafe { periods_cert_to_text(cert, &mut text) },
                PeriodsStatus::Ok
            );
            unsafe { periods_cert_free(cert) };
            take_string(text)
        })
        .collect();
    assert_eq!(texts[0], texts[1]);
    unsafe { periods_chi_free(chi) };
}

#[test]
fn realize_surfaces_the_negative_verdict_without_a_handle() {
    let chi = parse_chi(DEFICIT_CHI);
    let part = cstr("2");
    let mut outcome = PeriodsOutcome::Realizable;
    let mut cert = ptr::null_mut();
    let status = unsafe { periods_realize(chi, part.as_ptr(), 1, 0, &mut outcome, &mut cert) };
    assert_eq!(status, PeriodsStatus::Ok);
    assert_eq!(outcome, PeriodsOutcome::NotRealizable);
    assert!(cert.is_null());
    unsafe { periods_chi_free(chi) };
}

#[test]
fn tampered_certificate_text_is_rejected_at_parse() {
    let chi = parse_chi(LATTICE_CHI);
    let cert = realize_ok(chi, "2", 1);
    unsafe { periods_chi_free(chi) };
    let mut text: *mut c_char = ptr::null_mut();
    assert_eq!(
        unsafe { periods_cert_to_text(cert, &mut text) },
        PeriodsStatus::Ok
    );
    unsafe { periods_cert_free(cert) };
    let text = take_string(text);

    let tampered = text.replace("\n1 0 0 0\n", "\n2 0 0 0\n");
    assert_ne!(tampered, text);
    let ctext = cstr(&tampered);
    let mut reparsed = ptr::null_mut();
    let status = unsafe { periods_cert_parse(ctext.as_ptr(), &mut reparsed) };
    assert_eq!(status, PeriodsStatus::ParseError);
    assert!(reparsed.is_null());
    assert!(!last_error().is_empty());
}
