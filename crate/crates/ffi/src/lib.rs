//! C ABI over the mtprobe detectors.
//!
//! Handles are opaque and owned by the caller once returned; free them with the
//! matching `*_free` function. Every fallible call returns an [`MtpStatus`]; on failure
//! [`mtp_last_error`] describes what went wrong on the calling thread.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mtprobe::alignment::{parse_pharaoh, token_lengths, AlignOutcome};
use mtprobe::corpus::{Detection, ReportRecord, SentencePair};
use mtprobe::pipeline::{standard_filter, DetectorSet, DropReason, FilterVerdict, RunConfig, RunMode};
use mtprobe::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Io = 4,
    InvalidInput = 5,
    OutOfRange = 6,
    Internal = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtpFilterVerdict {
    Keep = 0,
    DropEmpty = 1,
    DropRatio = 2,
    DropLength = 3,
    DropLanguage = 4,
}

/// Compiled detector set. Safe to share between threads for concurrent checks.
pub struct MtpDetector {
    set: DetectorSet,
}

/// Detections for one pair.
pub struct MtpDetections {
    items: Vec<Detection>,
    detectors: Vec<CString>,
    evidence: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<Vec<u8>>) {
    let text = CString::new(message).unwrap_or_else(|e| {
        let mut bytes = e.into_vec();
        bytes.retain(|&b| b != 0);
        CString::new(bytes).expect("NUL bytes removed")
    });
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(err: &Error) -> MtpStatus {
    match err {
        Error::Config(_) | Error::UnsupportedLanguagePair { .. } | Error::Table { .. } => MtpStatus::Config,
        Error::Io { .. } | Error::UnequalLength { .. } => MtpStatus::Io,
        Error::Alignment(_) | Error::Protocol { .. } | Error::Report { .. } => MtpStatus::InvalidInput,
        Error::Invariant(_) => MtpStatus::Internal,
    }
}

fn fail(status: MtpStatus, message: impl Into<Vec<u8>>) -> MtpStatus {
    set_error(message);
    status
}

/// Runs `f`, turning panics into [`MtpStatus::Panic`].
fn guarded(f: impl FnOnce() -> MtpStatus) -> MtpStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(MtpStatus::Panic, format!("panic: {msg}"))
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, MtpStatus> {
    if p.is_null() {
        return Err(fail(MtpStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(MtpStatus::InvalidUtf8, format!("{what} is not UTF-8: {e}")))
}

/// Message for the last failed call on this thread, or NULL. Valid until the next call
/// into this library from the same thread.
#[no_mangle]
pub extern "C" fn mtp_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mtp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a detector from a TOML run configuration. `config_toml` may be NULL for the
/// defaults. Corpus-level natural-hallucination detection is not available per pair.
/// Coverage needs `aligner = "external"` and links passed to
/// [`mtp_detector_check_aligned`].
#[no_mangle]
pub unsafe extern "C" fn mtp_detector_new(config_toml: *const c_char, out: *mut *mut MtpDetector) -> MtpStatus {
    guarded(|| {
        if out.is_null() {
            return fail(MtpStatus::NullPointer, "out is NULL");
        }
        *out = ptr::null_mut();
        let cfg = if config_toml.is_null() {
            RunConfig::default()
        } else {
            let text = match read_str(config_toml, "config") {
                Ok(t) => t,
                Err(s) => return s,
            };
            match RunConfig::from_toml(text) {
                Ok(c) => c,
                Err(e) => return fail(status_of(&e), e.to_string()),
            }
        };
        match DetectorSet::from_config(&cfg, RunMode::Detect) {
            Ok(set) => {
                *out = Box::into_raw(Box::new(MtpDetector { set }));
                MtpStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn mtp_detector_free(detector: *mut MtpDetector) {
    if !detector.is_null() {
        drop(Box::from_raw(detector));
    }
}

unsafe fn check(
    detector: *const MtpDetector,
    source: *const c_char,
    target: *const c_char,
    alignment: Option<*const c_char>,
    out: *mut *mut MtpDetections,
) -> MtpStatus {
    guarded(|| {
        if out.is_null() {
            return fail(MtpStatus::NullPointer, "out is NULL");
        }
        *out = ptr::null_mut();
        if detector.is_null() {
            return fail(MtpStatus::NullPointer, "detector is NULL");
        }
        let (src, tgt) = match (read_str(source, "source"), read_str(target, "target")) {
            (Ok(s), Ok(t)) => (s, t),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let pair = SentencePair::new(0, src, tgt);
        let outcome = match alignment {
            None => None,
            Some(a) => {
                let line = match read_str(a, "alignment") {
                    Ok(l) => l,
                    Err(s) => return s,
                };
                let (s, t) = token_lengths(&pair);
                match parse_pharaoh(line, s, t) {
                    Ok(links) => Some(AlignOutcome::Links(links)),
                    Err(e) => return fail(MtpStatus::OutOfRange, e.to_string()),
                }
            }
        };
        let items = (*detector).set.detect_pair(&pair, outcome.as_ref());
        let detectors = items
            .iter()
            .map(|d| CString::new(d.detector.as_str()).expect("detector names have no NUL"))
            .collect();
        let evidence = items
            .iter()
            .map(|d| CString::new(d.evidence.replace('\0', "")).expect("NUL removed"))
            .collect();
        *out = Box::into_raw(Box::new(MtpDetections {
            items,
            detectors,
            evidence,
        }));
        MtpStatus::Ok
    })
}

/// Runs every per-pair detector on one sentence pair.
#[no_mangle]
pub unsafe extern "C" fn mtp_detector_check(
    detector: *const MtpDetector,
    source: *const c_char,
    target: *const c_char,
    out: *mut *mut MtpDetections,
) -> MtpStatus {
    check(detector, source, target, None, out)
}

/// Like [`mtp_detector_check`], with Pharaoh-format links (`"0-0 1-2"`) over whitespace
/// tokens so that coverage can be checked when enabled.
#[no_mangle]
pub unsafe extern "C" fn mtp_detector_check_aligned(
    detector: *const MtpDetector,
    source: *const c_char,
    target: *const c_char,
    alignment: *const c_char,
    out: *mut *mut MtpDetections,
) -> MtpStatus {
    check(detector, source, target, Some(alignment), out)
}

#[no_mangle]
pub unsafe extern "C" fn mtp_detections_free(detections: *mut MtpDetections) {
    if !detections.is_null() {
        drop(Box::from_raw(detections));
    }
}

/// Number of detections; 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn mtp_detections_len(detections: *const MtpDetections) -> usize {
    detections.as_ref().map_or(0, |d| d.items.len())
}

/// Detector name of detection `index`, or NULL when out of range. Owned by `detections`.
#[no_mangle]
pub unsafe extern "C" fn mtp_detections_detector(detections: *const MtpDetections, index: usize) -> *const c_char {
    detections
        .as_ref()
        .and_then(|d| d.detectors.get(index))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Evidence text of detection `index`, or NULL when out of range. Owned by `detections`.
#[no_mangle]
pub unsafe extern "C" fn mtp_detections_evidence(detections: *const MtpDetections, index: usize) -> *const c_char {
    detections
        .as_ref()
        .and_then(|d| d.evidence.get(index))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Number of source spans of detection `index`; 0 when out of range.
#[no_mangle]
pub unsafe extern "C" fn mtp_detections_span_count(detections: *const MtpDetections, index: usize) -> usize {
    detections
        .as_ref()
        .and_then(|d| d.items.get(index))
        .map_or(0, |d| d.source_spans.len())
}

/// Character offsets `[start, end)` of span `span` of detection `index`.
#[no_mangle]
pub unsafe extern "C" fn mtp_detections_span(
    detections: *const MtpDetections,
    index: usize,
    span: usize,
    start: *mut usize,
    end: *mut usize,
) -> MtpStatus {
    guarded(|| {
        if detections.is_null() || start.is_null() || end.is_null() {
            return fail(MtpStatus::NullPointer, "NULL argument");
        }
        let detections = &*detections;
        match detections.items.get(index).and_then(|d| d.source_spans.get(span)) {
            Some(s) => {
                *start = s.start;
                *end = s.end;
                MtpStatus::Ok
            }
            None => fail(MtpStatus::OutOfRange, format!("no span {span} on detection {index}")),
        }
    })
}

/// The detections as report lines (one JSON object per line). Free with
/// [`mtp_string_free`].
#[no_mangle]
pub unsafe extern "C" fn mtp_detections_to_json(detections: *const MtpDetections, out: *mut *mut c_char) -> MtpStatus {
    guarded(|| {
        if detections.is_null() || out.is_null() {
            return fail(MtpStatus::NullPointer, "NULL argument");
        }
        *out = ptr::null_mut();
        let mut text = String::new();
        let detections = &*detections;
        for d in &detections.items {
            match serde_json::to_string(&ReportRecord::from(d)) {
                Ok(line) => {
                    text.push_str(&line);
                    text.push('\n');
                }
                Err(e) => return fail(MtpStatus::Internal, e.to_string()),
            }
        }
        match CString::new(text) {
            Ok(s) => {
                *out = s.into_raw();
                MtpStatus::Ok
            }
            Err(e) => fail(MtpStatus::Internal, e.to_string()),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn mtp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Length-ratio and length rules of the conventional bitext filter. No language check.
#[no_mangle]
pub unsafe extern "C" fn mtp_standard_filter(
    source: *const c_char,
    target: *const c_char,
    max_ratio: f64,
    max_words: usize,
    verdict: *mut MtpFilterVerdict,
) -> MtpStatus {
    guarded(|| {
        if verdict.is_null() {
            return fail(MtpStatus::NullPointer, "verdict is NULL");
        }
        let (src, tgt) = match (read_str(source, "source"), read_str(target, "target")) {
            (Ok(s), Ok(t)) => (s, t),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        if !(max_ratio >= 1.0) {
            return fail(MtpStatus::Config, "max_ratio must be at least 1");
        }
        let pair = SentencePair::new(0, src, tgt);
        *verdict = match standard_filter(&pair, max_ratio, max_words, &|_| true) {
            FilterVerdict::Keep => MtpFilterVerdict::Keep,
            FilterVerdict::Drop(DropReason::Empty) => MtpFilterVerdict::DropEmpty,
            FilterVerdict::Drop(DropReason::Ratio) => MtpFilterVerdict::DropRatio,
            FilterVerdict::Drop(DropReason::Length) => MtpFilterVerdict::DropLength,
            FilterVerdict::Drop(DropReason::Language) => MtpFilterVerdict::DropLanguage,
        };
        MtpStatus::Ok
    })
}
