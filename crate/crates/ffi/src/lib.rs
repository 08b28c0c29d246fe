//! C ABI over `fpscale`.
//!
//! Populations and samples cross the boundary as opaque handles created by
//! `fps_*_new` and released by `fps_*_free`. Every fallible call returns an
//! [`FpsStatus`]; on failure the message is available from
//! [`fps_last_error_message`] on the same thread. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fpscale::approx::{self, BootstrapPlan};
use fpscale::estimate::{self, ScaleModel};
use fpscale::hoeffding::{self, EdgeworthParams};
use fpscale::{population, ustat, Error, PopulationFrame, SampleDraw, StatKind};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpsStatus {
    Ok = 0,
    NullPointer = 1,
    Argument = 2,
    Size = 3,
    Data = 4,
    Degenerate = 5,
    Numerical = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpsKind {
    Gmd = 0,
    Var = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpsModel {
    Normal = 0,
    Exponential = 1,
    /// Uses the `shape` argument.
    Gamma = 2,
}

/// Parameters of the one-term Edgeworth expansion.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpsEdgeworthParams {
    pub alpha: f64,
    pub kappa: f64,
    pub tau_sq: f64,
    pub n: usize,
    pub pop_size: usize,
}

/// Opaque finite population.
pub struct FpsPopulation(PopulationFrame);

/// Opaque sample drawn without replacement.
pub struct FpsSample(SampleDraw);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> FpsStatus {
    match err {
        Error::Argument(_) | Error::Config(_) => FpsStatus::Argument,
        Error::Size(_) => FpsStatus::Size,
        Error::Data(_) | Error::Csv(_) => FpsStatus::Data,
        Error::DegenerateSample(_) | Error::DegenerateAux(_) | Error::Degenerate(_) => FpsStatus::Degenerate,
        Error::Numerical(_) => FpsStatus::Numerical,
        Error::Io(_) => FpsStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FpsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FpsStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            FpsStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            let status = status_of(&e);
            set_last_error(e.to_string());
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            FpsStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn kind(k: FpsKind) -> StatKind {
    match k {
        FpsKind::Gmd => StatKind::Gmd,
        FpsKind::Var => StatKind::Var,
    }
}

fn to_c(p: EdgeworthParams) -> FpsEdgeworthParams {
    FpsEdgeworthParams {
        alpha: p.alpha,
        kappa: p.kappa,
        tau_sq: p.tau_sq,
        n: p.n,
        pop_size: p.pop_size,
    }
}

fn from_c(p: &FpsEdgeworthParams) -> Result<EdgeworthParams, Failure> {
    Ok(EdgeworthParams::new(p.alpha, p.kappa, p.n, p.pop_size)?)
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fps_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fps_version() -> *const c_char {
    static VERSION: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(v) => v,
            Err(_) => panic!("version string"),
        };
    VERSION.as_ptr()
}

/// Builds a population from `len` values.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fps_population_new(
    values: *const f64,
    len: usize,
    out: *mut *mut FpsPopulation,
) -> FpsStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let frame = population::build_population(slice(values, len, "values")?)?;
        *out = Box::into_raw(Box::new(FpsPopulation(frame)));
        Ok(())
    })
}

/// # Safety
/// `pop` must come from [`fps_population_new`] and not be freed yet; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn fps_population_free(pop: *mut FpsPopulation) {
    if !pop.is_null() {
        drop(Box::from_raw(pop));
    }
}

/// # Safety
/// `pop` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fps_population_len(pop: *const FpsPopulation) -> usize {
    pop.as_ref().map_or(0, |p| p.0.len())
}

/// Population parameter `G` or `V`.
///
/// # Safety
/// `pop` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fps_population_scale(
    pop: *const FpsPopulation,
    k: FpsKind,
    out: *mut f64,
) -> FpsStatus {
    guard(|| {
        let pop = as_ref(pop, "pop")?;
        *as_mut(out, "out")? = population::population_scale(&pop.0, kind(k));
        Ok(())
    })
}

/// Exact variance of the U-statistic for samples of size `n`.
///
/// # Safety
/// `pop` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fps_u_variance(
    pop: *const FpsPopulation,
    n: usize,
    k: FpsKind,
    out: *mut f64,
) -> FpsStatus {
    guard(|| {
        let pop = as_ref(pop, "pop")?;
        *as_mut(out, "out")? = hoeffding::u_variance(&pop.0, n, kind(k))?;
        Ok(())
    })
}

/// Variance components `σ₁²`, `σ₂²`.
///
/// # Safety
/// `pop` must be a live handle; `sigma1_sq` and `sigma2_sq` writable.
#[no_mangle]
pub unsafe extern "C" fn fps_sigma_components(
    pop: *const FpsPopulation,
    n: usize,
    k: FpsKind,
    sigma1_sq: *mut f64,
    sigma2_sq: *mut f64,
) -> FpsStatus {
    guard(|| {
        let pop = as_ref(pop, "pop")?;
        let (s1, s2) = hoeffding::sigma_components(&pop.0, n, kind(k))?;
        *as_mut(sigma1_sq, "sigma1_sq")? = s1;
        *as_mut(sigma2_sq, "sigma2_sq")? = s2;
        Ok(())
    })
}

/// True Edgeworth parameters of the population.
///
/// # Safety
/// `pop` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fps_edgeworth_params_true(
    pop: *const FpsPopulation,
    n: usize,
    k: FpsKind,
    out: *mut FpsEdgeworthParams,
) -> FpsStatus {
    guard(|| {
        let pop = as_ref(pop, "pop")?;
        *as_mut(out, "out")? = to_c(hoeffding::edgeworth_params_true(&pop.0, n, kind(k))?);
        Ok(())
    })
}

/// Builds a sample of `len` values from a population of `parent_n` units.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fps_sample_new(
    values: *const f64,
    len: usize,
    parent_n: usize,
    out: *mut *mut FpsSample,
) -> FpsStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let s = SampleDraw::new(slice(values, len, "values")?.to_vec(), parent_n)?;
        *out = Box::into_raw(Box::new(FpsSample(s)));
        Ok(())
    })
}

/// # Safety
/// `s` must come from [`fps_sample_new`] and not be freed yet; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn fps_sample_free(s: *mut FpsSample) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// `U_G` or `U_V` of the sample.
///
/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fps_sample_statistic(s: *const FpsSample, k: FpsKind, out: *mut f64) -> FpsStatus {
    guard(|| {
        let s = as_ref(s, "sample")?;
        *as_mut(out, "out")? = ustat::u_statistic(&s.0, kind(k));
        Ok(())
    })
}

/// Jackknife variance `S²`.
///
/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fps_sample_jackknife(s: *const FpsSample, k: FpsKind, out: *mut f64) -> FpsStatus {
    guard(|| {
        let s = as_ref(s, "sample")?;
        *as_mut(out, "out")? = ustat::jackknife_variance(&s.0, kind(k))?;
        Ok(())
    })
}

/// Plug-in estimate of `Var U`.
///
/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fps_sample_variance_hat(
    s: *const FpsSample,
    k: FpsKind,
    out: *mut f64,
) -> FpsStatus {
    guard(|| {
        let s = as_ref(s, "sample")?;
        *as_mut(out, "out")? = estimate::sigma_components_hat(&s.0, kind(k))?.var_u;
        Ok(())
    })
}

/// Plug-in Edgeworth parameters from the sample.
///
/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fps_sample_edgeworth_params(
    s: *const FpsSample,
    k: FpsKind,
    out: *mut FpsEdgeworthParams,
) -> FpsStatus {
    guard(|| {
        let s = as_ref(s, "sample")?;
        *as_mut(out, "out")? = to_c(estimate::edgeworth_params_hat(&s.0, kind(k))?);
        Ok(())
    })
}

/// Bootstrap quantiles of the Studentized statistic at `nq` levels.
///
/// # Safety
/// `s` must be a live handle; `q` must point to `nq` doubles and `out` to
/// `nq` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fps_bootstrap_quantiles(
    s: *const FpsSample,
    k: FpsKind,
    outer_populations: usize,
    inner_resamples: usize,
    seed: u64,
    q: *const f64,
    nq: usize,
    out: *mut f64,
) -> FpsStatus {
    guard(|| {
        let s = as_ref(s, "sample")?;
        let levels = slice(q, nq, "q")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let plan = BootstrapPlan::new(outer_populations, inner_resamples, seed)?;
        let table = approx::bootstrap_distribution(&s.0, kind(k), plan, levels)?;
        std::slice::from_raw_parts_mut(out, nq).copy_from_slice(&table.quantiles);
        Ok(())
    })
}

/// One-term Edgeworth expansion `H(y)`, unclamped. Returns NaN for a NULL
/// or invalid `params`.
///
/// # Safety
/// `params` must be NULL or readable.
#[no_mangle]
pub unsafe extern "C" fn fps_edgeworth_cdf(params: *const FpsEdgeworthParams, y: f64) -> f64 {
    match params.as_ref().map(from_c) {
        Some(Ok(p)) => approx::edgeworth_cdf(y, &p),
        _ => f64::NAN,
    }
}

/// Solves `H(y) = q` on `[-12, 12]`.
///
/// # Safety
/// `params` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fps_edgeworth_quantile(
    params: *const FpsEdgeworthParams,
    q: f64,
    out: *mut f64,
) -> FpsStatus {
    guard(|| {
        let p = from_c(as_ref(params, "params")?)?;
        *as_mut(out, "out")? = approx::edgeworth_quantile(q, &p)?;
        Ok(())
    })
}

/// Standard normal distribution function.
#[no_mangle]
pub extern "C" fn fps_normal_cdf(y: f64) -> f64 {
    approx::normal_cdf(y)
}

/// Standard normal quantile for `q` in (0, 1).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fps_normal_quantile(q: f64, out: *mut f64) -> FpsStatus {
    guard(|| {
        *as_mut(out, "out")? = approx::normal_quantile(q)?;
        Ok(())
    })
}

/// Bias correction `a` of strategy S1; `shape` is read only for the gamma model.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fps_correction_factor(model: FpsModel, shape: f64, out: *mut f64) -> FpsStatus {
    guard(|| {
        let m = match model {
            FpsModel::Normal => ScaleModel::Normal,
            FpsModel::Exponential => ScaleModel::Exponential,
            FpsModel::Gamma => ScaleModel::Gamma { shape },
        };
        *as_mut(out, "out")? = estimate::correction_factor(m)?;
        Ok(())
    })
}
