//! C ABI for the periods engine.
//!
//! Everything crosses the boundary as opaque handles, status codes, or
//! NUL-terminated UTF-8 text in the library's own interchange formats. The
//! conventions are the usual ones for a C library:
//!
//! * Handles (`PeriodsChi`, `PeriodsCert`) are created by `_parse`
//!   constructors and released by the matching `_free`; freeing null is a
//!   no-op.
//! * Every fallible call returns a [`PeriodsStatus`]; results travel through
//!   out-pointers, which are written only on `Ok`.
//! * Strings returned through `char**` out-pointers are owned by the caller
//!   and must be released with [`periods_string_free`]. Strings returned as
//!   plain `const char*` are borrowed and must not be freed.
//! * After any call that returns a status other than `Ok`,
//!   [`periods_last_error`] gives a human-readable message. The pointer is
//!   valid on the calling thread until the next call into the library.
//!
//! The header `include/periods.h` is generated from this file with cbindgen
//! (`cargo build -p periods-ffi --features generate-header`).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fmt::Display;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;

use periods::builder::{realize, Realization, RealizationCertificate, RealizeOptions};
use periods::chi::{decide, Partition, PeriodVector, Verdict};
use periods::surface::verify_certificate;

/// Result of a library call.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodsStatus {
    /// The call succeeded and all out-pointers were written.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A text argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A document or literal failed to parse.
    ParseError = 3,
    /// Structurally valid input outside the library's domain (for example a
    /// partition whose genus does not match the character).
    DomainError = 4,
    /// An internal invariant failed; the message names it.
    InternalError = 5,
}

/// Three-valued answer of the decision and construction entry points.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodsOutcome {
    /// The character is realizable in the stratum (and, for
    /// [`periods_realize`], a certificate was produced).
    Realizable = 0,
    /// The character is provably not realizable in the stratum.
    NotRealizable = 1,
    /// Construction only: the packing heuristic ran out of retries. Not a
    /// verdict; the character is still realizable.
    Exhausted = 2,
}

/// Opaque handle to a parsed period character.
pub struct PeriodsChi {
    inner: PeriodVector,
}

/// Opaque handle to a realization certificate.
pub struct PeriodsCert {
    inner: RealizationCertificate,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Display) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).unwrap_or_default();
    });
}

fn clear_error() {
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::default();
    });
}

fn fail(status: PeriodsStatus, msg: impl Display) -> PeriodsStatus {
    set_error(msg);
    status
}

/// Runs a fallible body, translating panics into `InternalError` so unwinding
/// never crosses the ABI.
fn guarded(body: impl FnOnce() -> PeriodsStatus) -> PeriodsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unexpected panic".into());
            fail(PeriodsStatus::InternalError, msg)
        }
    }
}

/// # Safety
/// `text` must be null or point to a NUL-terminated string.
unsafe fn read_str<'a>(text: *const c_char) -> Result<&'a str, PeriodsStatus> {
    if text.is_null() {
        return Err(fail(PeriodsStatus::NullArgument, "null string argument"));
    }
    unsafe { CStr::from_ptr(text) }
        .to_str()
        .map_err(|e| fail(PeriodsStatus::InvalidUtf8, e))
}

fn give_string(out: *mut *mut c_char, text: String) -> PeriodsStatus {
    let c = match CString::new(text) {
        Ok(c) => c,
        Err(e) => return fail(PeriodsStatus::InternalError, e),
    };
    unsafe { *out = c.into_raw() };
    PeriodsStatus::Ok
}

fn parse_partition(text: &str, chi: &PeriodVector) -> Result<Partition, PeriodsStatus> {
    let part: Partition = text
        .parse()
        .map_err(|e| fail(PeriodsStatus::ParseError, e))?;
    if part.genus() != chi.genus() {
        return Err(fail(
            PeriodsStatus::DomainError,
            format!(
                "partition is for genus {}, character has genus {}",
                part.genus(),
                chi.genus()
            ),
        ));
    }
    Ok(part)
}

/// Returns the library version as a static string. Never fails; do not free.
#[no_mangle]
pub extern "C" fn periods_version() -> *const c_char {
    static VERSION: OnceLock<CString> = OnceLock::new();
    VERSION
        .get_or_init(|| CString::new(env!("CARGO_PKG_VERSION")).unwrap_or_default())
        .as_ptr()
}

/// Returns the message for the most recent failing call on this thread, or
/// an empty string if the most recent call succeeded.
///
/// The pointer is borrowed: valid until the next library call on the same
/// thread, and must not be freed.
#[no_mangle]
pub extern "C" fn periods_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Releases a string returned through a `char**` out-pointer. Null is a
/// no-op.
///
/// # Safety
/// `s` must be null or a pointer obtained from this library and not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn periods_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Parses a period character document (the `genus ... d ...` text format)
/// into a fresh handle.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn periods_chi_parse(
    text: *const c_char,
    out: *mut *mut PeriodsChi,
) -> PeriodsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(PeriodsStatus::NullArgument, "null out pointer");
        }
        let text = match unsafe { read_str(text) } {
            Ok(t) => t,
            Err(status) => return status,
        };
        match text.parse::<PeriodVector>() {
            Ok(chi) => {
                unsafe { *out = Box::into_raw(Box::new(PeriodsChi { inner: chi })) };
                PeriodsStatus::Ok
            }
            Err(e) => fail(PeriodsStatus::ParseError, e),
        }
    })
}

/// Returns the genus of the character, or 0 if the handle is null.
///
/// # Safety
/// `chi` must be null or a live handle from [`periods_chi_parse`].
#[no_mangle]
pub unsafe extern "C" fn periods_chi_genus(chi: *const PeriodsChi) -> u32 {
    if chi.is_null() {
        return 0;
    }
    unsafe { &*chi }.inner.genus() as u32
}

/// Releases a character handle. Null is a no-op.
///
/// # Safety
/// `chi` must be null or a live handle from [`periods_chi_parse`], and must
/// not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn periods_chi_free(chi: *mut PeriodsChi) {
    if !chi.is_null() {
        drop(unsafe { Box::from_raw(chi) });
    }
}

/// Decides realizability of the character in the stratum given by
/// `partition` (text form, e.g. `"1,3"`). Writes `Realizable` or
/// `NotRealizable` to `out_outcome`; on `NotRealizable`, if `out_reason` is
/// non-null it receives the reason as a caller-owned string (null on the
/// positive verdict).
///
/// # Safety
/// `chi` must be a live handle; `partition` a NUL-terminated string;
/// `out_outcome` a valid pointer; `out_reason` null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn periods_decide(
    chi: *const PeriodsChi,
    partition: *const c_char,
    out_outcome: *mut PeriodsOutcome,
    out_reason: *mut *mut c_char,
) -> PeriodsStatus {
    guarded(|| {
        if chi.is_null() || out_outcome.is_null() {
            return fail(PeriodsStatus::NullArgument, "null argument");
        }
        let chi = &unsafe { &*chi }.inner;
        let part_text = match unsafe { read_str(partition) } {
            Ok(t) => t,
            Err(status) => return status,
        };
        let part = match parse_partition(part_text, chi) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match decide(chi, &part) {
            Ok(Verdict::Realizable) => {
                unsafe {
                    *out_outcome = PeriodsOutcome::Realizable;
                    if !out_reason.is_null() {
                        *out_reason = std::ptr::null_mut();
                    }
                }
                PeriodsStatus::Ok
            }
            Ok(Verdict::NotRealizable(reason)) => {
                unsafe { *out_outcome = PeriodsOutcome::NotRealizable };
                if out_reason.is_null() {
                    PeriodsStatus::Ok
                } else {
                    give_string(out_reason, reason.to_string())
                }
            }
            Err(e) => fail(PeriodsStatus::DomainError, e),
        }
    })
}

/// Decides and, on the positive verdict, constructs a certificate.
///
/// `seed` drives the packing heuristic (matching seeds give identical
/// certificates); `max_steps` bounds each normalization run, with 0 meaning
/// the default budget. On `Realizable` a fresh certificate handle is written
/// to `out_cert`; on the other outcomes `out_cert` is set to null.
/// `Exhausted` means the packing retries ran out, not that the character is
/// unrealizable.
///
/// # Safety
/// `chi` must be a live handle; `partition` a NUL-terminated string;
/// `out_outcome` and `out_cert` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn periods_realize(
    chi: *const PeriodsChi,
    partition: *const c_char,
    seed: u64,
    max_steps: u32,
    out_outcome: *mut PeriodsOutcome,
    out_cert: *mut *mut PeriodsCert,
) -> PeriodsStatus {
    guarded(|| {
        if chi.is_null() || out_outcome.is_null() || out_cert.is_null() {
            return fail(PeriodsStatus::NullArgument, "null argument");
        }
        let chi = &unsafe { &*chi }.inner;
        let part_text = match unsafe { read_str(partition) } {
            Ok(t) => t,
            Err(status) => return status,
        };
        let part = match parse_partition(part_text, chi) {
            Ok(p) => p,
            Err(status) => return status,
        };
        let mut options = RealizeOptions {
            seed,
            ..RealizeOptions::default()
        };
        if max_steps > 0 {
            options.max_steps = max_steps as usize;
        }
        unsafe { *out_cert = std::ptr::null_mut() };
        match realize(chi, &part, &options) {
            Ok(Realization::Certificate(cert)) => {
                unsafe {
                    *out_outcome = PeriodsOutcome::Realizable;
                    *out_cert = Box::into_raw(Box::new(PeriodsCert { inner: *cert }));
                }
                PeriodsStatus::Ok
            }
            Ok(Realization::NotRealizable(reason)) => {
                unsafe { *out_outcome = PeriodsOutcome::NotRealizable };
                set_error(reason);
                PeriodsStatus::Ok
            }
            Ok(Realization::HeuristicExhausted) => {
                unsafe { *out_outcome = PeriodsOutcome::Exhausted };
                PeriodsStatus::Ok
            }
            Err(e) => fail(PeriodsStatus::InternalError, e),
        }
    })
}

/// Parses a certificate document (the `CERT 1` text format) into a fresh
/// handle. Parsing re-validates every structural invariant; tampered
/// documents are rejected here.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn periods_cert_parse(
    text: *const c_char,
    out: *mut *mut PeriodsCert,
) -> PeriodsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(PeriodsStatus::NullArgument, "null out pointer");
        }
        let text = match unsafe { read_str(text) } {
            Ok(t) => t,
            Err(status) => return status,
        };
        match RealizationCertificate::from_text(text) {
            Ok(cert) => {
                unsafe { *out = Box::into_raw(Box::new(PeriodsCert { inner: cert })) };
                PeriodsStatus::Ok
            }
            Err(e) => fail(PeriodsStatus::ParseError, e),
        }
    })
}

/// Serializes a certificate to its text format as a caller-owned string.
///
/// # Safety
/// `cert` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn periods_cert_to_text(
    cert: *const PeriodsCert,
    out: *mut *mut c_char,
) -> PeriodsStatus {
    guarded(|| {
        if cert.is_null() || out.is_null() {
            return fail(PeriodsStatus::NullArgument, "null argument");
        }
        give_string(out, unsafe { &*cert }.inner.to_text())
    })
}

/// Runs the full verification suite on a certificate. `out_valid` receives
/// the verdict; if `out_report` is non-null it receives the per-check report
/// as a caller-owned string.
///
/// A failing check is a property of the certificate, not of the call: the
/// status is `Ok` whenever the suite ran.
///
/// # Safety
/// `cert` must be a live handle; `out_valid` a valid pointer; `out_report`
/// null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn periods_cert_verify(
    cert: *const PeriodsCert,
    out_valid: *mut bool,
    out_report: *mut *mut c_char,
) -> PeriodsStatus {
    guarded(|| {
        if cert.is_null() || out_valid.is_null() {
            return fail(PeriodsStatus::NullArgument, "null argument");
        }
        let report = verify_certificate(&unsafe { &*cert }.inner);
        unsafe { *out_valid = report.all_passed() };
        if out_report.is_null() {
            PeriodsStatus::Ok
        } else {
            give_string(out_report, report.to_string())
        }
    })
}

/// Releases a certificate handle. Null is a no-op.
///
/// # Safety
/// `cert` must be null or a live handle, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn periods_cert_free(cert: *mut PeriodsCert) {
    if !cert.is_null() {
        drop(unsafe { Box::from_raw(cert) });
    }
}
