//! C ABI over the isotune library.
//!
//! Every function returns an [`IsotuneStatus`]. On failure a message is kept
//! per thread and can be read with [`isotune_last_error`]. Objects created by
//! the library are released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use isotune::app::config::TuneConfig;
use isotune::app::data::read_experiment;
use isotune::app::AppError;
use isotune::frac::{build_reference_model, OustaloupSettings, ReferenceModelSpec};
use isotune::sim::{closed_loop_sim, fictitious_reference_samples, impulse_response, toeplitz_solve_samples, Signal};
use isotune::tf::DiscreteTf;
use isotune::tuning::{build_controller, tune, ControllerSpec, LossEvaluator, Structure};
use isotune::Error;

pub const ISOTUNE_STRUCTURE_IOPID: u32 = 0;
pub const ISOTUNE_STRUCTURE_FOPID: u32 = 1;
pub const ISOTUNE_STRUCTURE_FOPI: u32 = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsotuneStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Config = 4,
    Data = 5,
    Io = 6,
    Panic = 7,
}

/// Opaque discrete-time transfer function.
pub struct IsotuneTf {
    inner: DiscreteTf,
}

struct Failure(IsotuneStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::ZeroDenominator
            | Error::NonProper { .. }
            | Error::SamplingMismatch(..)
            | Error::InvalidSamplingTime(_)
            | Error::AlphaOutOfRange(_)
            | Error::InvalidOustaloup(_)
            | Error::InvalidFracTf(_)
            | Error::InvalidReference(_)
            | Error::NonFiniteSample(_)
            | Error::EmptySignal
            | Error::LengthMismatch(..)
            | Error::ZeroLeadingReference
            | Error::InvalidController(_)
            | Error::AboveNyquist(..)
            | Error::InvalidSettings(_) => IsotuneStatus::InvalidArgument,
            _ => IsotuneStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

impl From<AppError> for Failure {
    fn from(e: AppError) -> Self {
        match e {
            AppError::Core(inner) => inner.into(),
            AppError::Config(_) => Failure(IsotuneStatus::Config, e.to_string()),
            AppError::BadData(_) => Failure(IsotuneStatus::Data, e.to_string()),
            AppError::Io { .. } => Failure(IsotuneStatus::Io, e.to_string()),
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(IsotuneStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(IsotuneStatus::InvalidArgument, msg.into())
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> IsotuneStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            IsotuneStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            IsotuneStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn tf_ref<'a>(p: *const IsotuneTf, what: &str) -> Result<&'a DiscreteTf, Failure> {
    p.as_ref().map(|t| &t.inner).ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn emit_tf(out: *mut *mut IsotuneTf, tf: DiscreteTf) -> Result<(), Failure> {
    *out = Box::into_raw(Box::new(IsotuneTf { inner: tf }));
    Ok(())
}

fn structure(code: u32) -> Result<Structure, Failure> {
    match code {
        ISOTUNE_STRUCTURE_IOPID => Ok(Structure::IoPid),
        ISOTUNE_STRUCTURE_FOPID => Ok(Structure::FoPid),
        ISOTUNE_STRUCTURE_FOPI => Ok(Structure::FoPi),
        _ => Err(invalid(format!("unknown controller structure {code}"))),
    }
}

/// Message for the most recent failure on this thread; empty after a
/// success. Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn isotune_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn isotune_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Discrete transfer function from coefficients in `z`, highest power first.
///
/// # Safety
/// `num` and `den` must point to `num_len` and `den_len` readable doubles;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isotune_tf_from_coeffs(
    num: *const f64,
    num_len: usize,
    den: *const f64,
    den_len: usize,
    ts: f64,
    out: *mut *mut IsotuneTf,
) -> IsotuneStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let tf = DiscreteTf::from_coeffs(slice(num, num_len, "num")?, slice(den, den_len, "den")?, ts)?;
        emit_tf(out, tf)
    })
}

/// Releases a transfer function. Null is ignored.
///
/// # Safety
/// `tf` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn isotune_tf_free(tf: *mut IsotuneTf) {
    if !tf.is_null() {
        drop(Box::from_raw(tf));
    }
}

/// Numerator and denominator degrees.
///
/// # Safety
/// `tf` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn isotune_tf_order(
    tf: *const IsotuneTf,
    num_degree: *mut usize,
    den_degree: *mut usize,
) -> IsotuneStatus {
    guard(|| {
        let g = tf_ref(tf, "tf")?;
        if num_degree.is_null() || den_degree.is_null() {
            return Err(null("output"));
        }
        *num_degree = g.zeros().len();
        *den_degree = g.poles().len();
        Ok(())
    })
}

/// Frequency response at `omega` rad/s.
///
/// # Safety
/// `tf` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn isotune_tf_freq_response(
    tf: *const IsotuneTf,
    omega: f64,
    re: *mut f64,
    im: *mut f64,
) -> IsotuneStatus {
    guard(|| {
        let g = tf_ref(tf, "tf")?;
        if re.is_null() || im.is_null() {
            return Err(null("output"));
        }
        let v = g.freq_response(omega)?;
        *re = v.re;
        *im = v.im;
        Ok(())
    })
}

/// Largest pole modulus.
///
/// # Safety
/// `tf` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isotune_tf_spectral_radius(tf: *const IsotuneTf, out: *mut f64) -> IsotuneStatus {
    guard(|| {
        let g = tf_ref(tf, "tf")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = g.spectral_radius();
        Ok(())
    })
}

/// First `len` samples of the impulse response.
///
/// # Safety
/// `tf` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn isotune_tf_impulse(tf: *const IsotuneTf, len: usize, out: *mut f64) -> IsotuneStatus {
    guard(|| {
        let g = tf_ref(tf, "tf")?;
        let dst = slice_mut(out, len, "out")?;
        if len == 0 {
            return Ok(());
        }
        dst.copy_from_slice(impulse_response(g, len)?.samples());
        Ok(())
    })
}

/// Product of two transfer functions.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isotune_tf_mul(
    a: *const IsotuneTf,
    b: *const IsotuneTf,
    out: *mut *mut IsotuneTf,
) -> IsotuneStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let g = tf_ref(a, "a")?.mul(tf_ref(b, "b")?)?;
        emit_tf(out, g)
    })
}

/// Unity negative feedback `L / (1 + L)`.
///
/// # Safety
/// `l` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isotune_tf_feedback(l: *const IsotuneTf, out: *mut *mut IsotuneTf) -> IsotuneStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let g = tf_ref(l, "l")?.feedback_unity()?;
        emit_tf(out, g)
    })
}

/// Discretized reference closed loop for a phase margin in degrees and a
/// crossover in rad/s. `oust_order` counts zero-pole pairs on each side of
/// the band centre.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isotune_reference_model(
    phi_m_deg: f64,
    omega_c: f64,
    oust_order: usize,
    omega_b: f64,
    omega_h: f64,
    ts: f64,
    out: *mut *mut IsotuneTf,
) -> IsotuneStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let oust = OustaloupSettings::new(oust_order, omega_b, omega_h)?;
        let spec = ReferenceModelSpec::new(phi_m_deg, omega_c, oust, ts)?;
        emit_tf(out, build_reference_model(&spec)?.m_ref)
    })
}

/// Discretized controller of the given structure (`ISOTUNE_STRUCTURE_*`).
///
/// # Safety
/// `theta` must hold `theta_len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isotune_controller(
    structure_code: u32,
    theta: *const f64,
    theta_len: usize,
    ts: f64,
    oust_order: usize,
    omega_b: f64,
    omega_h: f64,
    out: *mut *mut IsotuneTf,
) -> IsotuneStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let oust = OustaloupSettings::new(oust_order, omega_b, omega_h)?;
        let spec = ControllerSpec::new(
            structure(structure_code)?,
            slice(theta, theta_len, "theta")?.to_vec(),
            ts,
            oust,
        )?;
        emit_tf(out, build_controller(&spec)?)
    })
}

/// Unity-feedback simulation of plant `p` with controller `c` driven by `r`.
///
/// # Safety
/// `r`, `u` and `y` must hold `len` doubles; handles must be live.
#[no_mangle]
pub unsafe extern "C" fn isotune_closed_loop_sim(
    p: *const IsotuneTf,
    c: *const IsotuneTf,
    r: *const f64,
    len: usize,
    u: *mut f64,
    y: *mut f64,
) -> IsotuneStatus {
    guard(|| {
        let (p, c) = (tf_ref(p, "p")?, tf_ref(c, "c")?);
        let r = Signal::new(slice(r, len, "r")?.to_vec(), p.ts())?;
        let (u_dst, y_dst) = (slice_mut(u, len, "u")?, slice_mut(y, len, "y")?);
        let (us, ys) = closed_loop_sim(p, c, &r)?;
        u_dst.copy_from_slice(us.samples());
        y_dst.copy_from_slice(ys.samples());
        Ok(())
    })
}

/// Fictitious reference `C^{-1} u + y` for logged data.
///
/// # Safety
/// `u`, `y` and `out` must hold `len` doubles; `c` must be live.
#[no_mangle]
pub unsafe extern "C" fn isotune_fictitious_reference(
    c: *const IsotuneTf,
    u: *const f64,
    y: *const f64,
    len: usize,
    out: *mut f64,
) -> IsotuneStatus {
    guard(|| {
        let c = tf_ref(c, "c")?;
        let rt = fictitious_reference_samples(c, slice(u, len, "u")?, slice(y, len, "y")?)?;
        slice_mut(out, len, "out")?.copy_from_slice(&rt);
        Ok(())
    })
}

/// Solves the lower-triangular Toeplitz system with first column
/// `first_col` for right-hand side `rhs`.
///
/// # Safety
/// All buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn isotune_toeplitz_solve(
    first_col: *const f64,
    rhs: *const f64,
    len: usize,
    out: *mut f64,
) -> IsotuneStatus {
    guard(|| {
        let x = toeplitz_solve_samples(slice(first_col, len, "first_col")?, slice(rhs, len, "rhs")?)?;
        slice_mut(out, len, "out")?.copy_from_slice(&x);
        Ok(())
    })
}

/// Runs the tuner on a TOML configuration and an experiment CSV. On success
/// `out_json` receives a JSON object with `parameter_names`, `theta_star`,
/// `j_star`, `j_threshold`, `verdict` and `evaluations`; release it with
/// [`isotune_string_free`].
///
/// # Safety
/// `config_toml` and `data_path` must be NUL-terminated; `out_json` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn isotune_tune(
    config_toml: *const c_char,
    data_path: *const c_char,
    out_json: *mut *mut c_char,
) -> IsotuneStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let cfg = TuneConfig::from_toml_str(str_arg(config_toml, "config_toml")?)?;
        let data = read_experiment(Path::new(str_arg(data_path, "data_path")?), cfg.ts)?;
        let model = build_reference_model(&cfg.reference_spec()?)?;
        let m = impulse_response(&model.m_ref, data.len())?;
        let ev = LossEvaluator::new(cfg.controller_spec(&cfg.controller.theta0)?, data, &m)?;
        let res = tune(
            &ev,
            &cfg.bounds()?,
            &cfg.pso,
            Some(&cfg.controller.theta0),
            cfg.j_threshold,
        )?;
        let json = serde_json::json!({
            "parameter_names": cfg.controller.structure.parameter_names(),
            "theta_star": res.theta_star,
            "j_star": res.j_star,
            "j_threshold": res.j_threshold,
            "verdict": res.verdict,
            "evaluations": res.evaluations,
        });
        *out_json = CString::new(json.to_string()).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn isotune_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
