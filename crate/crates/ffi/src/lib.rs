//! C ABI over `scrforge`.
//!
//! All objects are opaque handles created by `*_new` / `*_load` /
//! [`scr_approximate`] and released by the matching `*_free`. Every fallible
//! function returns an [`ScrStatus`]; on failure the message is available
//! from [`scr_last_error`] on the same thread. Matrices cross the boundary as
//! row-major `double` buffers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use scrforge::binarize::SCRSystem;
use scrforge::io::{read_reservoir, read_scr, write_reservoir, write_scr};
use scrforge::linalg::{Matrix, Vector};
use scrforge::pipeline::{approximate_scr_default, ApproximationReport, ValidationConfig};
use scrforge::reservoir::{InputStream, LinearReadout, LinearReservoir};
use scrforge::Error;

/// A linear reservoir `(W, V, A)` with its input bound.
pub struct ScrReservoir(LinearReservoir);

/// A simple cycle reservoir.
pub struct ScrSystem(SCRSystem);

/// Construction report of [`scr_approximate`].
pub struct ScrReport(ApproximationReport);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NumericalFailure = 3,
    ResourceLimit = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ScrStatus {
    match e.root() {
        Error::InvalidInput(_) => ScrStatus::InvalidInput,
        Error::NumericalFailure { .. } => ScrStatus::NumericalFailure,
        Error::ResourceLimit(_) => ScrStatus::ResourceLimit,
        Error::Ingestion { .. } | Error::Io(_) => ScrStatus::Io,
        Error::Stage { .. } => ScrStatus::InvalidInput,
    }
}

enum Failure {
    Status(ScrStatus, String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn null() -> Failure {
    Failure::Status(ScrStatus::NullPointer, "null pointer argument".into())
}

/// Runs `f`, converting errors and panics into a status and the thread's
/// last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ScrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ScrStatus::Ok
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            ScrStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null());
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Status(ScrStatus::InvalidInput, "path is not UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

fn dims_product(a: usize, b: usize) -> Result<usize, Failure> {
    a.checked_mul(b)
        .ok_or_else(|| Failure::Status(ScrStatus::InvalidInput, "dimensions overflow".into()))
}

fn stream_from(inputs: &[f64], steps: usize, m: usize, bound: f64) -> Result<InputStream, Failure> {
    let samples = inputs
        .chunks(m)
        .take(steps)
        .map(Vector::from_column_slice)
        .collect();
    Ok(InputStream::new(samples, bound)?)
}

fn run_into(
    r: &LinearReservoir,
    inputs: *const f64,
    steps: usize,
    washout: usize,
    outputs: *mut f64,
    outputs_len: usize,
) -> Result<(), Failure> {
    let m = r.input_dim();
    let d = r.output_dim();
    let input = unsafe { slice(inputs, dims_product(steps, m)?)? };
    let need = dims_product(steps.saturating_sub(washout), d)?;
    if outputs_len < need {
        return Err(Failure::Status(
            ScrStatus::BufferTooSmall,
            format!("output buffer holds {outputs_len} values, {need} needed"),
        ));
    }
    let out = unsafe { slice_mut(outputs, need)? };
    let u = stream_from(input, steps, m, r.input_bound())?;
    for (t, y) in r.run(&u, washout)?.iter().enumerate() {
        out[t * d..(t + 1) * d].copy_from_slice(y.as_slice());
    }
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn scr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn scr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a reservoir from row-major `w` (n x n), `v` (n x m) and `a`
/// (d x n). Requires `||W|| < 1`.
///
/// # Safety
/// The buffers must hold the stated number of values and `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn scr_reservoir_new(
    n: usize,
    m: usize,
    d: usize,
    w: *const f64,
    v: *const f64,
    a: *const f64,
    input_bound: f64,
    out: *mut *mut ScrReservoir,
) -> ScrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let w = Matrix::from_row_slice(n, n, slice(w, dims_product(n, n)?)?);
        let v = Matrix::from_row_slice(n, m, slice(v, dims_product(n, m)?)?);
        let a = Matrix::from_row_slice(d, n, slice(a, dims_product(d, n)?)?);
        let r = LinearReservoir::new(w, v, LinearReadout::new(a)?, input_bound)?;
        *out = Box::into_raw(Box::new(ScrReservoir(r)));
        Ok(())
    })
}

/// Loads a reservoir directory (manifest.txt, coupling.csv, input.csv,
/// readout.csv).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn scr_reservoir_load(path: *const c_char, out: *mut *mut ScrReservoir) -> ScrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let r = read_reservoir(&path_arg(path)?)?;
        *out = Box::into_raw(Box::new(ScrReservoir(r)));
        Ok(())
    })
}

/// # Safety
/// `r` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn scr_reservoir_save(r: *const ScrReservoir, path: *const c_char) -> ScrStatus {
    guard(|| Ok(write_reservoir(&handle(r)?.0, &path_arg(path)?)?))
}

/// # Safety
/// `r` must come from this library and not be used afterwards. NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn scr_reservoir_free(r: *mut ScrReservoir) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be a live handle; the out pointers may be NULL.
#[no_mangle]
pub unsafe extern "C" fn scr_reservoir_dims(
    r: *const ScrReservoir,
    state_dim: *mut usize,
    input_dim: *mut usize,
    output_dim: *mut usize,
    lambda: *mut f64,
) -> ScrStatus {
    guard(|| {
        let r = &handle(r)?.0;
        if let Some(p) = state_dim.as_mut() {
            *p = r.state_dim();
        }
        if let Some(p) = input_dim.as_mut() {
            *p = r.input_dim();
        }
        if let Some(p) = output_dim.as_mut() {
            *p = r.output_dim();
        }
        if let Some(p) = lambda.as_mut() {
            *p = r.lambda();
        }
        Ok(())
    })
}

/// Drives the reservoir from rest with `steps` row-major inputs and writes
/// the `(steps - washout) x d` post-washout outputs.
///
/// # Safety
/// `inputs` must hold `steps * m` values, `outputs` `outputs_len` values.
#[no_mangle]
pub unsafe extern "C" fn scr_reservoir_run(
    r: *const ScrReservoir,
    inputs: *const f64,
    steps: usize,
    washout: usize,
    outputs: *mut f64,
    outputs_len: usize,
) -> ScrStatus {
    guard(|| run_into(&handle(r)?.0, inputs, steps, washout, outputs, outputs_len))
}

/// Approximates `r` within `epsilon` by a simple cycle reservoir,
/// validating on `streams` uniform streams of length `length`.
///
/// # Safety
/// `r` must be a live handle; `out_system` and `out_report` writable.
#[no_mangle]
pub unsafe extern "C" fn scr_approximate(
    r: *const ScrReservoir,
    epsilon: f64,
    streams: usize,
    length: usize,
    seed: u64,
    out_system: *mut *mut ScrSystem,
    out_report: *mut *mut ScrReport,
) -> ScrStatus {
    guard(|| {
        if out_system.is_null() || out_report.is_null() {
            return Err(null());
        }
        let cfg = ValidationConfig {
            streams,
            length,
            seed,
        };
        let (scr, report) = approximate_scr_default(&handle(r)?.0, epsilon, &cfg)?;
        *out_system = Box::into_raw(Box::new(ScrSystem(scr)));
        *out_report = Box::into_raw(Box::new(ScrReport(report)));
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards. NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn scr_system_free(s: *mut ScrSystem) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Loads a directory written by [`scr_system_save`].
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn scr_system_load(path: *const c_char, out: *mut *mut ScrSystem) -> ScrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let s = read_scr(&path_arg(path)?)?;
        *out = Box::into_raw(Box::new(ScrSystem(s)));
        Ok(())
    })
}

/// # Safety
/// `s` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn scr_system_save(s: *const ScrSystem, path: *const c_char) -> ScrStatus {
    guard(|| Ok(write_scr(&handle(s)?.0, &path_arg(path)?)?))
}

/// # Safety
/// `s` must be a live handle; the out pointers may be NULL.
#[no_mangle]
pub unsafe extern "C" fn scr_system_dims(
    s: *const ScrSystem,
    n_scr: *mut usize,
    input_dim: *mut usize,
    output_dim: *mut usize,
    lambda: *mut f64,
) -> ScrStatus {
    guard(|| {
        let s = &handle(s)?.0;
        if let Some(p) = n_scr.as_mut() {
            *p = s.n_scr();
        }
        if let Some(p) = input_dim.as_mut() {
            *p = s.input_dim();
        }
        if let Some(p) = output_dim.as_mut() {
            *p = s.readout().output_dim();
        }
        if let Some(p) = lambda.as_mut() {
            *p = s.lambda();
        }
        Ok(())
    })
}

/// Copies the row-major `n_scr x m` input signs (each -1 or +1).
///
/// # Safety
/// `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn scr_system_signs(s: *const ScrSystem, buf: *mut i8, len: usize) -> ScrStatus {
    guard(|| {
        let signs = handle(s)?.0.signs();
        if len < signs.len() {
            return Err(Failure::Status(
                ScrStatus::BufferTooSmall,
                format!("sign buffer holds {len} values, {} needed", signs.len()),
            ));
        }
        slice_mut(buf, signs.len())?.copy_from_slice(signs);
        Ok(())
    })
}

/// Copies the row-major `d x n_scr` readout.
///
/// # Safety
/// `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn scr_system_readout(s: *const ScrSystem, buf: *mut f64, len: usize) -> ScrStatus {
    guard(|| {
        let a = handle(s)?.0.readout().matrix();
        let need = a.len();
        if len < need {
            return Err(Failure::Status(
                ScrStatus::BufferTooSmall,
                format!("readout buffer holds {len} values, {need} needed"),
            ));
        }
        let out = slice_mut(buf, need)?;
        for (i, row) in a.row_iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                out[i * a.ncols() + j] = *x;
            }
        }
        Ok(())
    })
}

/// Same contract as [`scr_reservoir_run`].
///
/// # Safety
/// See [`scr_reservoir_run`].
#[no_mangle]
pub unsafe extern "C" fn scr_system_run(
    s: *const ScrSystem,
    inputs: *const f64,
    steps: usize,
    washout: usize,
    outputs: *mut f64,
    outputs_len: usize,
) -> ScrStatus {
    guard(|| {
        let r = handle(s)?.0.reservoir()?;
        run_into(&r, inputs, steps, washout, outputs, outputs_len)
    })
}

/// # Safety
/// `rep` must come from this library and not be used afterwards. NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn scr_report_free(rep: *mut ScrReport) {
    if !rep.is_null() {
        drop(Box::from_raw(rep));
    }
}

/// Numeric report field by key (e.g. `"empirical_output_gap"`, `"n_c"`).
///
/// # Safety
/// `rep` must be a live handle, `key` a NUL-terminated string, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn scr_report_get(rep: *const ScrReport, key: *const c_char, out: *mut f64) -> ScrStatus {
    guard(|| {
        let rep = &handle(rep)?.0;
        if key.is_null() || out.is_null() {
            return Err(null());
        }
        let key = CStr::from_ptr(key).to_string_lossy();
        let (_, value) = rep
            .fields()
            .into_iter()
            .find(|(k, _)| *k == key)
            .ok_or_else(|| Failure::Status(ScrStatus::InvalidInput, format!("unknown report key `{key}`")))?;
        *out = value
            .parse()
            .map_err(|_| Failure::Status(ScrStatus::InvalidInput, format!("`{key}` is not numeric")))?;
        Ok(())
    })
}

/// Writes the report as `key = value` lines into `buf` (NUL-terminated).
/// `needed` receives the required size including the terminator.
///
/// # Safety
/// `buf` must hold `len` bytes (may be NULL when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn scr_report_text(
    rep: *const ScrReport,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> ScrStatus {
    guard(|| {
        let text = handle(rep)?.0.to_key_value();
        let bytes = text.as_bytes();
        if let Some(p) = needed.as_mut() {
            *p = bytes.len() + 1;
        }
        if len < bytes.len() + 1 {
            return Err(Failure::Status(
                ScrStatus::BufferTooSmall,
                format!("text buffer holds {len} bytes, {} needed", bytes.len() + 1),
            ));
        }
        let out = slice_mut(buf.cast::<u8>(), bytes.len() + 1)?;
        out[..bytes.len()].copy_from_slice(bytes);
        out[bytes.len()] = 0;
        Ok(())
    })
}
