//! C ABI for `coprime-tdm`.
//!
//! Objects cross the boundary as opaque handles (`CtPattern`, `CtWeights`,
//! `CtSchedule`) created by `ct_*` constructors and released with the matching
//! `*_free`. Every fallible call returns a [`CtStatus`]; the message of the last
//! failure on the calling thread is available from [`ct_last_error`].
//! Strings returned by the library must be released with [`ct_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use coprime_tdm::diffsets::{
    bias_window, weight_brute_force, weight_closed_form_z2, WeightFunction,
};
use coprime_tdm::patterns::{gen_exsca, Layout};
use coprime_tdm::scheduler::{
    build_schedule_with, check_exsca_overlap, ScheduleOptions, SwitchSchedule,
};
use coprime_tdm::{CoprimePair, Error, ExscaConfig, SamplingPattern, Scheme};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParam = 2,
    NotCoprime = 3,
    GridMismatch = 4,
    GridResolution = 5,
    LagOutOfRange = 6,
    UndefinedSpectrum = 7,
    SlotCollision = 8,
    TooFast = 9,
    NoFeasibleShift = 10,
    BufferTooSmall = 11,
    Internal = 12,
}

impl From<&Error> for CtStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::NotCoprime { .. } => CtStatus::NotCoprime,
            Error::InvalidParam(_) => CtStatus::InvalidParam,
            Error::GridMismatch { .. } => CtStatus::GridMismatch,
            Error::GridResolution { .. } => CtStatus::GridResolution,
            Error::LagOutOfRange { .. } => CtStatus::LagOutOfRange,
            Error::UndefinedSpectrum => CtStatus::UndefinedSpectrum,
            Error::SlotCollision { .. } => CtStatus::SlotCollision,
            Error::TooFast { .. } => CtStatus::TooFast,
            Error::NoFeasibleShift { .. } => CtStatus::NoFeasibleShift,
        }
    }
}

/// Acquisition layouts reachable through [`ct_pattern_combined`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtScheme {
    NyquistTdm = 0,
    Extended = 1,
    ExtendedTdm2Sampler = 2,
}

impl From<CtScheme> for Scheme {
    fn from(s: CtScheme) -> Self {
        match s {
            CtScheme::NyquistTdm => Scheme::NyquistTdm,
            CtScheme::Extended => Scheme::Extended,
            CtScheme::ExtendedTdm2Sampler => Scheme::ExtendedTdm2Sampler,
        }
    }
}

/// Opaque sampling pattern.
pub struct CtPattern(SamplingPattern);

/// Opaque self weight function.
pub struct CtWeights(WeightFunction);

/// Opaque set of switch schedules, one per sampler.
pub struct CtSchedule(Vec<SwitchSchedule>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn fail(status: CtStatus, msg: impl Into<String>) -> CtStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> Result<(), CtStatus>) -> CtStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CtStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(CtStatus::Internal, "panic inside coprime-tdm"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, CtStatus>;
}

impl<T> OrStatus<T> for coprime_tdm::Result<T> {
    fn or_status(self) -> Result<T, CtStatus> {
        self.map_err(|e| fail(CtStatus::from(&e), e.to_string()))
    }
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, CtStatus> {
    p.as_ref()
        .ok_or_else(|| fail(CtStatus::NullPointer, "null handle"))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), CtStatus> {
    if out.is_null() {
        return Err(fail(CtStatus::NullPointer, "null output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out<T: Copy>(
    src: &[T],
    buf: *mut T,
    cap: usize,
    out_len: *mut usize,
) -> Result<(), CtStatus> {
    if !out_len.is_null() {
        *out_len = src.len();
    }
    if src.len() > cap {
        return Err(fail(
            CtStatus::BufferTooSmall,
            format!("need room for {} values, got {cap}", src.len()),
        ));
    }
    if !src.is_empty() {
        if buf.is_null() {
            return Err(fail(CtStatus::NullPointer, "null output buffer"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    Ok(())
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ct_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`). Returns the full message length without the NUL, or 0
/// when the last call succeeded.
#[no_mangle]
pub unsafe extern "C" fn ct_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let slot = slot.borrow();
        let Some(msg) = slot.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Releases a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ct_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Combined pattern (all samplers) of `signal` (1 or 2) under `scheme`.
#[no_mangle]
pub unsafe extern "C" fn ct_pattern_combined(
    m: u64,
    n: u64,
    scheme: CtScheme,
    signal: u32,
    out: *mut *mut CtPattern,
) -> CtStatus {
    guard(|| {
        let pair = CoprimePair::new(m, n).or_status()?;
        let merged = Layout::new(pair, scheme.into())
            .combined(signal)
            .or_status()?;
        store(out, CtPattern(merged.pattern))
    })
}

/// One sampler's branch (`sampler` 1 or 2) of an ExSCA signal over `span` ticks.
/// Offsets are ticks on a grid with subdivision `q`.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn ct_pattern_exsca(
    m: u64,
    n: u64,
    ex: u64,
    q: u32,
    s11: u64,
    s12: u64,
    signal: u32,
    sampler: u32,
    span: u64,
    out: *mut *mut CtPattern,
) -> CtStatus {
    guard(|| {
        let pair = CoprimePair::new(m, n).or_status()?;
        let cfg = ExscaConfig::new(pair, ex, q, s11, s12).or_status()?;
        let (a, b) = gen_exsca(&cfg, signal, span).or_status()?;
        let chosen = match sampler {
            1 => a,
            2 => b,
            other => {
                return Err(fail(
                    CtStatus::InvalidParam,
                    format!("sampler must be 1 or 2, got {other}"),
                ))
            }
        };
        store(out, CtPattern(chosen))
    })
}

/// Parses a pattern from its JSON form.
#[no_mangle]
pub unsafe extern "C" fn ct_pattern_from_json(
    json: *const c_char,
    out: *mut *mut CtPattern,
) -> CtStatus {
    guard(|| {
        if json.is_null() {
            return Err(fail(CtStatus::NullPointer, "null JSON string"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| fail(CtStatus::InvalidParam, "JSON is not UTF-8"))?;
        let p: SamplingPattern = serde_json::from_str(text)
            .map_err(|e| fail(CtStatus::InvalidParam, format!("bad pattern JSON: {e}")))?;
        store(out, CtPattern(p))
    })
}

/// JSON form of a pattern; release with [`ct_string_free`]. Null on error.
#[no_mangle]
pub unsafe extern "C" fn ct_pattern_to_json(p: *const CtPattern) -> *mut c_char {
    clear_error();
    match p.as_ref() {
        Some(p) => serde_json::to_string(&p.0).map_or(ptr::null_mut(), owned_string),
        None => {
            set_error("null handle");
            ptr::null_mut()
        }
    }
}

#[no_mangle]
pub unsafe extern "C" fn ct_pattern_len(p: *const CtPattern) -> usize {
    p.as_ref().map_or(0, |p| p.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn ct_pattern_q(p: *const CtPattern) -> u32 {
    p.as_ref().map_or(0, |p| p.0.grid().q)
}

#[no_mangle]
pub unsafe extern "C" fn ct_pattern_span(p: *const CtPattern) -> u64 {
    p.as_ref().map_or(0, |p| p.0.grid().span_ticks)
}

/// Copies the instants into `buf`. `out_len` always receives the required length.
#[no_mangle]
pub unsafe extern "C" fn ct_pattern_instants(
    p: *const CtPattern,
    buf: *mut u64,
    cap: usize,
    out_len: *mut usize,
) -> CtStatus {
    guard(|| copy_out(deref(p)?.0.instants(), buf, cap, out_len))
}

/// Copies the 0/1 occupancy vector (length `span`) into `buf`.
#[no_mangle]
pub unsafe extern "C" fn ct_pattern_indicator(
    p: *const CtPattern,
    buf: *mut u8,
    cap: usize,
    out_len: *mut usize,
) -> CtStatus {
    guard(|| {
        let bits: Vec<u8> = deref(p)?.0.indicator().into_iter().map(u8::from).collect();
        copy_out(&bits, buf, cap, out_len)
    })
}

#[no_mangle]
pub unsafe extern "C" fn ct_pattern_free(p: *mut CtPattern) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Brute-force self weight function for lags `0..=lag_max`.
#[no_mangle]
pub unsafe extern "C" fn ct_weights_brute_force(
    p: *const CtPattern,
    lag_max: u64,
    out: *mut *mut CtWeights,
) -> CtStatus {
    guard(|| {
        let p = deref(p)?;
        store(out, CtWeights(weight_brute_force(&p.0, lag_max)))
    })
}

/// Weight at a signed lag; 0 outside the stored range or for a null handle.
#[no_mangle]
pub unsafe extern "C" fn ct_weights_at(w: *const CtWeights, lag: i64) -> u64 {
    w.as_ref().map_or(0, |w| w.0.at(lag))
}

#[no_mangle]
pub unsafe extern "C" fn ct_weights_lag_max(w: *const CtWeights) -> u64 {
    w.as_ref().map_or(0, |w| w.0.lag_max)
}

/// Sum over the symmetric lag range.
#[no_mangle]
pub unsafe extern "C" fn ct_weights_total(w: *const CtWeights) -> u64 {
    w.as_ref().map_or(0, |w| w.0.total())
}

/// Bias window on `num_freqs` uniform bins of `[0, 2 pi)`, written to `buf`.
#[no_mangle]
pub unsafe extern "C" fn ct_weights_bias_window(
    w: *const CtWeights,
    num_freqs: usize,
    buf: *mut f64,
    cap: usize,
) -> CtStatus {
    guard(|| {
        let values = bias_window(&deref(w)?.0, num_freqs).or_status()?;
        copy_out(&values, buf, cap, ptr::null_mut())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ct_weights_free(w: *mut CtWeights) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Closed-form second-signal weight at lag `lag` (units of `d`).
#[no_mangle]
pub unsafe extern "C" fn ct_closed_form_z2(m: u64, n: u64, lag: i64, out: *mut i64) -> CtStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(CtStatus::NullPointer, "null output pointer"));
        }
        let pair = CoprimePair::new(m, n).or_status()?;
        *out = weight_closed_form_z2(&pair, lag).or_status()?;
        Ok(())
    })
}

/// Number of instants sampled by both ExSCA samplers, per signal, within `span` ticks.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn ct_exsca_overlap(
    m: u64,
    n: u64,
    ex: u64,
    q: u32,
    s11: u64,
    s12: u64,
    span: u64,
    out_signal1: *mut usize,
    out_signal2: *mut usize,
) -> CtStatus {
    guard(|| {
        if out_signal1.is_null() || out_signal2.is_null() {
            return Err(fail(CtStatus::NullPointer, "null output pointer"));
        }
        let pair = CoprimePair::new(m, n).or_status()?;
        let cfg = ExscaConfig::new(pair, ex, q, s11, s12).or_status()?;
        let report = check_exsca_overlap(&cfg, span).or_status()?;
        *out_signal1 = report.per_signal[0].instants.len();
        *out_signal2 = report.per_signal[1].instants.len();
        Ok(())
    })
}

/// Builds switch schedules for `count` patterns grouped by sampler id.
#[no_mangle]
pub unsafe extern "C" fn ct_schedule_build(
    patterns: *const *const CtPattern,
    count: usize,
    hold_ticks: u64,
    out: *mut *mut CtSchedule,
) -> CtStatus {
    guard(|| {
        if patterns.is_null() && count > 0 {
            return Err(fail(CtStatus::NullPointer, "null pattern array"));
        }
        let handles = if count == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(patterns, count)
        };
        let owned = handles
            .iter()
            .map(|&h| deref(h).map(|p| p.0.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let schedules = build_schedule_with(&owned, ScheduleOptions { hold_ticks }).or_status()?;
        store(out, CtSchedule(schedules))
    })
}

/// Number of switches (samplers) in the schedule set.
#[no_mangle]
pub unsafe extern "C" fn ct_schedule_switch_count(s: *const CtSchedule) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

/// JSON form of the schedule set; release with [`ct_string_free`].
#[no_mangle]
pub unsafe extern "C" fn ct_schedule_to_json(s: *const CtSchedule) -> *mut c_char {
    clear_error();
    match s.as_ref() {
        Some(s) => serde_json::to_string(&s.0).map_or(ptr::null_mut(), owned_string),
        None => {
            set_error("null handle");
            ptr::null_mut()
        }
    }
}

#[no_mangle]
pub unsafe extern "C" fn ct_schedule_free(s: *mut CtSchedule) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}
