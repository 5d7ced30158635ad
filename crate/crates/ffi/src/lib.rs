// SPDX-License-Identifier: Apache-2.0

//! C ABI for palette-core.
//!
//! Ensembles and reports are opaque heap handles released with their `_free`
//! function. Every fallible call returns a [`PaletteStatus`]; on failure the
//! message is available from [`palette_last_error`] on the same thread.
//! Strings returned through `char **` out-parameters are owned by the caller
//! and must be released with [`palette_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use palette_core::divergence::alpha_divergence;
use palette_core::ensemble::PartitionEnsemble;
use palette_core::pipeline::{run_pipeline, PipelineConfig, PipelineOutput};
use palette_core::synth::{generate_synthetic_ensemble, SynthMode, SynthParams};
use palette_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaletteStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    Numerical = 5,
    Io = 6,
    Internal = 7,
}

/// Opaque partition ensemble.
pub struct PaletteEnsemble {
    inner: PartitionEnsemble,
}

/// Opaque pipeline result: report plus both diagrams.
pub struct PaletteReport {
    inner: PipelineOutput,
}

pub const PALETTE_DIAGRAM_1D: u32 = 1;
pub const PALETTE_DIAGRAM_2D: u32 = 2;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
    Ok(v) => v,
    Err(_) => panic!("version contains a NUL byte"),
};

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> PaletteStatus {
    match err.root() {
        Error::Parse(_) => PaletteStatus::Parse,
        Error::Numerical(_) => PaletteStatus::Numerical,
        Error::Io(_) => PaletteStatus::Io,
        _ => PaletteStatus::Validation,
    }
}

struct Fail(PaletteStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PaletteStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PaletteStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            PaletteStatus::Internal
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(PaletteStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(PaletteStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(PaletteStatus::NullPointer, format!("{what} is null")))
}

fn check_out<T>(out: *mut T) -> Result<(), Fail> {
    if out.is_null() {
        Err(Fail(PaletteStatus::NullPointer, "output pointer is null".into()))
    } else {
        Ok(())
    }
}

unsafe fn write_string(out: *mut *mut c_char, s: &str) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail(PaletteStatus::Internal, "string contains a NUL byte".into()))?;
    *out = c.into_raw();
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn palette_version() -> *const c_char {
    VERSION.as_ptr()
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn palette_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parse an ensemble from its JSON encoding.
#[no_mangle]
pub unsafe extern "C" fn palette_ensemble_from_json(json: *const c_char, out: *mut *mut PaletteEnsemble) -> PaletteStatus {
    guard(|| {
        check_out(out)?;
        let text = read_str(json, "json")?;
        let inner = PartitionEnsemble::from_json_str(text)?;
        *out = Box::into_raw(Box::new(PaletteEnsemble { inner }));
        Ok(())
    })
}

/// Generate a synthetic ensemble. `mode` is "hard", "soft" or "hierarchical-split".
#[no_mangle]
pub unsafe extern "C" fn palette_synthesize(
    n: usize,
    k: usize,
    l: usize,
    eta: f64,
    mode: *const c_char,
    seed: u64,
    out: *mut *mut PaletteEnsemble,
) -> PaletteStatus {
    guard(|| {
        check_out(out)?;
        let mode: SynthMode = read_str(mode, "mode")?.parse()?;
        let s = generate_synthetic_ensemble(&SynthParams { n, k, l, eta, mode, seed })?;
        *out = Box::into_raw(Box::new(PaletteEnsemble { inner: s.ensemble }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn palette_ensemble_free(e: *mut PaletteEnsemble) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Number of vertices, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn palette_ensemble_n_vertices(e: *const PaletteEnsemble) -> usize {
    e.as_ref().map_or(0, |e| e.inner.n_vertices())
}

#[no_mangle]
pub unsafe extern "C" fn palette_ensemble_n_partitions(e: *const PaletteEnsemble) -> usize {
    e.as_ref().map_or(0, |e| e.inner.n_partitions())
}

/// Total number of groups over all partitions, empty ones included.
#[no_mangle]
pub unsafe extern "C" fn palette_ensemble_n_groups(e: *const PaletteEnsemble) -> usize {
    e.as_ref().map_or(0, |e| e.inner.total_groups())
}

/// Content hash identifying the ensemble.
#[no_mangle]
pub unsafe extern "C" fn palette_ensemble_id(e: *const PaletteEnsemble, out: *mut *mut c_char) -> PaletteStatus {
    guard(|| {
        check_out(out)?;
        let e = deref(e, "ensemble")?;
        write_string(out, &e.inner.content_hash())
    })
}

/// Canonical JSON encoding of the ensemble.
#[no_mangle]
pub unsafe extern "C" fn palette_ensemble_json(e: *const PaletteEnsemble, out: *mut *mut c_char) -> PaletteStatus {
    guard(|| {
        check_out(out)?;
        let e = deref(e, "ensemble")?;
        write_string(out, &e.inner.to_json_string())
    })
}

/// Run the full pipeline. `config_json` is a pipeline configuration object;
/// only `m` is required.
#[no_mangle]
pub unsafe extern "C" fn palette_run(
    e: *const PaletteEnsemble,
    config_json: *const c_char,
    out: *mut *mut PaletteReport,
) -> PaletteStatus {
    guard(|| {
        check_out(out)?;
        let e = deref(e, "ensemble")?;
        let cfg: PipelineConfig = serde_json::from_str(read_str(config_json, "config")?).map_err(Error::from)?;
        let inner = run_pipeline(&e.inner, &cfg)?;
        *out = Box::into_raw(Box::new(PaletteReport { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn palette_report_free(r: *mut PaletteReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Report as pretty-printed JSON.
#[no_mangle]
pub unsafe extern "C" fn palette_report_json(r: *const PaletteReport, out: *mut *mut c_char) -> PaletteStatus {
    guard(|| {
        check_out(out)?;
        let r = deref(r, "report")?;
        write_string(out, &r.inner.report.to_json())
    })
}

/// Stage timings of the run as JSON.
#[no_mangle]
pub unsafe extern "C" fn palette_report_timings_json(r: *const PaletteReport, out: *mut *mut c_char) -> PaletteStatus {
    guard(|| {
        check_out(out)?;
        let r = deref(r, "report")?;
        write_string(out, &serde_json::to_string(&r.inner.timings).map_err(Error::from)?)
    })
}

/// SVG document; `kind` is `PALETTE_DIAGRAM_1D` or `PALETTE_DIAGRAM_2D`.
#[no_mangle]
pub unsafe extern "C" fn palette_report_svg(r: *const PaletteReport, kind: u32, out: *mut *mut c_char) -> PaletteStatus {
    guard(|| {
        check_out(out)?;
        let r = deref(r, "report")?;
        let svg = match kind {
            PALETTE_DIAGRAM_1D => &r.inner.svg_1d,
            PALETTE_DIAGRAM_2D => &r.inner.svg_2d,
            other => return Err(Fail(PaletteStatus::Validation, format!("unknown diagram kind {other}"))),
        };
        write_string(out, svg)
    })
}

#[no_mangle]
pub unsafe extern "C" fn palette_report_n_vertices(r: *const PaletteReport) -> usize {
    r.as_ref().map_or(0, |r| r.inner.report.n_vertices)
}

/// Number of rows drawn in the diagrams.
#[no_mangle]
pub unsafe extern "C" fn palette_report_n_rows(r: *const PaletteReport) -> usize {
    r.as_ref().map_or(0, |r| r.inner.report.reduced.rows.len())
}

/// Copy the vertex order into `out`, which must hold exactly `len` entries
/// with `len == palette_report_n_vertices(r)`.
#[no_mangle]
pub unsafe extern "C" fn palette_report_vertex_order(r: *const PaletteReport, out: *mut usize, len: usize) -> PaletteStatus {
    guard(|| {
        check_out(out)?;
        let r = deref(r, "report")?;
        let perm = r.inner.report.vertex_order.permutation();
        if len != perm.len() {
            return Err(Fail(
                PaletteStatus::Validation,
                format!("buffer holds {len} entries, order has {}", perm.len()),
            ));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(perm);
        Ok(())
    })
}

/// Alpha-divergence between two distributions of length `n`.
#[no_mangle]
pub unsafe extern "C" fn palette_alpha_divergence(
    p: *const f64,
    q: *const f64,
    n: usize,
    alpha: f64,
    out: *mut f64,
) -> PaletteStatus {
    guard(|| {
        check_out(out)?;
        if p.is_null() || q.is_null() {
            return Err(Fail(PaletteStatus::NullPointer, "distribution pointer is null".into()));
        }
        let p = std::slice::from_raw_parts(p, n);
        let q = std::slice::from_raw_parts(q, n);
        *out = alpha_divergence(p, q, alpha)?;
        Ok(())
    })
}

/// Release a string returned by this library. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn palette_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
