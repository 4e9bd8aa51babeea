//! C interface to quintic-lab.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free`. Every fallible call returns a
//! `QlStatus`; on failure `ql_last_error` describes the most recent error on
//! the calling thread. Strings returned by the library are freed with
//! `ql_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use quintic_lab::cli::{run, ExperimentConfig};
use quintic_lab::lattice::sphere_count;
use quintic_lab::nonlinearity::{decompose_j, identity_error, quintic_fourier_bruteforce, quintic_fourier_fft};
use quintic_lab::random_data::randomized_datum;
use quintic_lab::spaces::{hs_norm, vp_norm};
use quintic_lab::{Error, FourierField};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QlStatus {
    Ok = 0,
    InvalidParameter = 1,
    BudgetExceeded = 2,
    Instability = 3,
    Degenerate = 4,
    GridMismatch = 5,
    UnknownEstimate = 6,
    Format = 7,
    Io = 8,
    NullPointer = 9,
    Panic = 10,
}

/// Opaque handle to a Fourier field on the cube |n_i| ≤ N.
pub struct QlField(FourierField);

thread_local! {
    static LAST_ERROR: RefCell<Option<String>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> QlStatus {
    match e {
        Error::InvalidParameter(_) => QlStatus::InvalidParameter,
        Error::BudgetExceeded { .. } => QlStatus::BudgetExceeded,
        Error::Instability { .. } => QlStatus::Instability,
        Error::Degenerate(_) => QlStatus::Degenerate,
        Error::GridMismatch(_) => QlStatus::GridMismatch,
        Error::UnknownEstimate(_) => QlStatus::UnknownEstimate,
        Error::Format(_) | Error::Json(_) => QlStatus::Format,
        Error::Io(_) => QlStatus::Io,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QlStatus::Ok,
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            QlStatus::NullPointer
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            QlStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn field_ref<'a>(p: *const QlField, what: &'static str) -> Result<&'a FourierField, Fail> {
    p.as_ref().map(|f| &f.0).ok_or(Fail::Null(what))
}

fn boxed(f: FourierField) -> *mut QlField {
    Box::into_raw(Box::new(QlField(f)))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ql_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy of the last error message on this thread, or NULL if none.
#[no_mangle]
pub extern "C" fn ql_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        Some(m) => CString::new(m.replace('\0', " ")).map(CString::into_raw).unwrap_or(ptr::null_mut()),
        None => ptr::null_mut(),
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ql_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ql_field_zeros(n_max: usize, out: *mut *mut QlField) -> QlStatus {
    guard(|| {
        let o = out_ref(out, "out")?;
        *o = boxed(FourierField::zeros(n_max));
        Ok(())
    })
}

/// Randomized datum φ^ω with coefficients g_n ⟨n⟩^{−(5/2−α)}.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ql_field_randomized(seed: u64, alpha: f64, n_max: usize, out: *mut *mut QlField) -> QlStatus {
    guard(|| {
        let o = out_ref(out, "out")?;
        *o = boxed(randomized_datum(seed, alpha, n_max)?.phi_omega);
        Ok(())
    })
}

/// # Safety
/// `f` must be NULL or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ql_field_free(f: *mut QlField) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ql_field_n_max(f: *const QlField, out: *mut usize) -> QlStatus {
    guard(|| {
        *out_ref(out, "out")? = field_ref(f, "field")?.n_max();
        Ok(())
    })
}

/// Number of coefficients, (2N+1)³.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ql_field_len(f: *const QlField, out: *mut usize) -> QlStatus {
    guard(|| {
        *out_ref(out, "out")? = field_ref(f, "field")?.len();
        Ok(())
    })
}

/// Copy coefficients as interleaved (re, im) pairs in lexicographic order of
/// n (x slowest); `len` counts doubles and must equal 2·ql_field_len.
///
/// # Safety
/// `data` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ql_field_get_coefficients(f: *const QlField, data: *mut f64, len: usize) -> QlStatus {
    guard(|| {
        let field = field_ref(f, "field")?;
        if data.is_null() {
            return Err(Fail::Null("data"));
        }
        if len != 2 * field.len() {
            return Err(Error::InvalidParameter(format!("buffer holds {len} doubles, need {}", 2 * field.len())).into());
        }
        let dst = std::slice::from_raw_parts_mut(data, len);
        for (pair, c) in dst.chunks_mut(2).zip(field.coefficients()) {
            pair[0] = c.re;
            pair[1] = c.im;
        }
        Ok(())
    })
}

/// # Safety
/// `data` must hold `len` doubles; `f` must be a valid mutable handle.
#[no_mangle]
pub unsafe extern "C" fn ql_field_set_coefficients(f: *mut QlField, data: *const f64, len: usize) -> QlStatus {
    guard(|| {
        let field = &mut f.as_mut().ok_or(Fail::Null("field"))?.0;
        if data.is_null() {
            return Err(Fail::Null("data"));
        }
        if len != 2 * field.len() {
            return Err(Error::InvalidParameter(format!("buffer holds {len} doubles, need {}", 2 * field.len())).into());
        }
        let src = std::slice::from_raw_parts(data, len);
        for (c, pair) in field.coefficients_mut().iter_mut().zip(src.chunks(2)) {
            *c = Complex64::new(pair[0], pair[1]);
        }
        Ok(())
    })
}

/// ‖f‖_{Hˢ} = (Σ⟨n⟩^{2s}|a_n|²)^{1/2}.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ql_field_hs_norm(f: *const QlField, s: f64, out: *mut f64) -> QlStatus {
    guard(|| {
        *out_ref(out, "out")? = hs_norm(field_ref(f, "field")?, s);
        Ok(())
    })
}

/// Fourier coefficients of |u|⁴u on the 5N cube; `bruteforce` selects the
/// direct convolution instead of the padded FFT.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ql_quintic(f: *const QlField, bruteforce: bool, out: *mut *mut QlField) -> QlStatus {
    guard(|| {
        let u = field_ref(f, "field")?;
        let o = out_ref(out, "out")?;
        let q = if bruteforce { quintic_fourier_bruteforce(u)? } else { quintic_fourier_fft(u) };
        *o = boxed(q);
        Ok(())
    })
}

/// Relative error of Σ J_k + resonant term against |u|⁴u.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ql_identity_error(f: *const QlField, out: *mut f64) -> QlStatus {
    guard(|| {
        let u = field_ref(f, "field")?;
        let o = out_ref(out, "out")?;
        *o = identity_error(u, &decompose_j(u));
        Ok(())
    })
}

/// #{n ∈ ℤ³ : |n|² = r2}.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ql_sphere_count(r2: u64, out: *mut u64) -> QlStatus {
    guard(|| {
        *out_ref(out, "out")? = sphere_count(r2);
        Ok(())
    })
}

/// p-variation of a complex series given as `len` interleaved (re, im) pairs.
///
/// # Safety
/// `series` must hold 2·len doubles.
#[no_mangle]
pub unsafe extern "C" fn ql_vp_norm(series: *const f64, len: usize, p: f64, out: *mut f64) -> QlStatus {
    guard(|| {
        let o = out_ref(out, "out")?;
        if series.is_null() && len > 0 {
            return Err(Fail::Null("series"));
        }
        if !(p >= 1.0) {
            return Err(Error::InvalidParameter("p must be at least 1".into()).into());
        }
        let raw = if len == 0 { &[][..] } else { std::slice::from_raw_parts(series, 2 * len) };
        let v: Vec<Complex64> = raw.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
        *o = vp_norm(&v, p);
        Ok(())
    })
}

/// Run an experiment config (the CLI's --config JSON). On success `out`
/// receives a JSON array of the written artifact paths.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ql_run_config(config_json: *const c_char, out: *mut *mut c_char) -> QlStatus {
    guard(|| {
        if config_json.is_null() {
            return Err(Fail::Null("config_json"));
        }
        let o = out_ref(out, "out")?;
        let text = CStr::from_ptr(config_json)
            .to_str()
            .map_err(|_| Error::Format("config is not UTF-8".into()))?;
        let cfg = ExperimentConfig::from_json(text)?;
        let paths: Vec<String> = run(&cfg)?.iter().map(|p| p.display().to_string()).collect();
        let doc = serde_json::to_string(&paths).map_err(Error::from)?;
        *o = CString::new(doc).map_err(|_| Error::Format("path contains NUL".into()))?.into_raw();
        Ok(())
    })
}
