//! C interface to `shapeinv`.
//!
//! Objects are opaque handles created by `si_*_new` style functions and
//! released with the matching `si_*_free`. Every fallible call returns an
//! [`SiStatus`]; on failure a description is kept per thread and can be
//! copied out with [`si_last_error_message`]. Complex vectors cross the
//! boundary as separate real and imaginary arrays of length `2L + 1`, ordered
//! from frequency `-L` to `L`.
//!
//! Every pointer argument must be null or valid for the stated length, and
//! handles must come from this library and be freed exactly once.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use num_complex::Complex64;
use shapeinv::divergence::{gauss_hellinger, gauss_tv};
use shapeinv::io::{read_dataset, write_dataset};
use shapeinv::mcmc::{posterior_radius, run_chain, McmcConfig};
use shapeinv::model::{simulate, Dataset, SimConfig};
use shapeinv::prior::PriorConfig;
use shapeinv::rng::substream;
use shapeinv::{DiscreteMeasure, Error, FourierCurve, GridDensity, NormKind, ShiftMeasure};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Infeasible = 4,
    OverlappingIntervals = 5,
    Parse = 6,
    Io = 7,
    EmptyResults = 8,
    Panic = 9,
}

/// Band-limited curve.
pub struct SiCurve(FourierCurve);

/// Shift law on the circle.
pub struct SiMeasure(ShiftMeasure);

/// Observed Fourier coefficients.
pub struct SiDataset(Dataset);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> SiStatus {
    match e {
        Error::DimensionMismatch { .. } => SiStatus::DimensionMismatch,
        Error::InvalidArgument(_) => SiStatus::InvalidArgument,
        Error::InfeasibleWithinTolerance { .. } => SiStatus::Infeasible,
        Error::OverlappingIntervals { .. } => SiStatus::OverlappingIntervals,
        Error::Parse { .. } => SiStatus::Parse,
        Error::EmptyResults => SiStatus::EmptyResults,
        Error::Io(_) => SiStatus::Io,
    }
}

enum Failure {
    Null,
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Outcome<()>) -> SiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SiStatus::Ok,
        Ok(Err(Failure::Null)) => {
            set_error("null pointer argument".into());
            SiStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            SiStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T) -> Outcome<&'a T> {
    p.as_ref().ok_or(Failure::Null)
}

unsafe fn out<'a, T>(p: *mut T) -> Outcome<&'a mut T> {
    p.as_mut().ok_or(Failure::Null)
}

unsafe fn input<'a>(p: *const f64, len: usize) -> Outcome<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null);
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize) -> Outcome<&'a mut [f64]> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null);
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn complex_input(re: *const f64, im: *const f64, len: usize) -> Outcome<Vec<Complex64>> {
    let (re, im) = (input(re, len)?, input(im, len)?);
    Ok(re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect())
}

unsafe fn complex_output(src: &[Complex64], re: *mut f64, im: *mut f64, len: usize) -> Outcome<()> {
    if len != src.len() {
        return Err(Error::DimensionMismatch {
            expected: src.len(),
            got: len,
        }
        .into());
    }
    let (re, im) = (output(re, len)?, output(im, len)?);
    for ((r, i), c) in re.iter_mut().zip(im.iter_mut()).zip(src) {
        *r = c.re;
        *i = c.im;
    }
    Ok(())
}

unsafe fn path<'a>(p: *const c_char) -> Outcome<&'a Path> {
    if p.is_null() {
        return Err(Failure::Null);
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::InvalidArgument("path is not valid UTF-8".into()))?;
    Ok(Path::new(s))
}

fn boxed<T>(dst: &mut *mut T, value: T) {
    *dst = Box::into_raw(Box::new(value));
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len - 1` bytes) and returns the full message
/// length in bytes. Passing a null `buf` only queries the length.
#[no_mangle]
pub unsafe extern "C" fn si_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates a curve from `len = 2L + 1` coefficients.
#[no_mangle]
pub unsafe extern "C" fn si_curve_new(re: *const f64, im: *const f64, len: usize, curve: *mut *mut SiCurve) -> SiStatus {
    guard(|| {
        let dst = out(curve)?;
        let c = FourierCurve::from_dense(complex_input(re, im, len)?)?;
        boxed(dst, SiCurve(c));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn si_curve_free(curve: *mut SiCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Cutoff `L` of the curve, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn si_curve_cutoff(curve: *const SiCurve) -> usize {
    curve.as_ref().map_or(0, |c| c.0.cutoff())
}

/// Copies the `2L + 1` coefficients out.
#[no_mangle]
pub unsafe extern "C" fn si_curve_coeffs(curve: *const SiCurve, re: *mut f64, im: *mut f64, len: usize) -> SiStatus {
    guard(|| complex_output(get(curve)?.0.as_slice(), re, im, len))
}

/// `kind = 0` for the L2 norm, `1` for the H1 seminorm, otherwise the
/// Sobolev norm of order `s`.
#[no_mangle]
pub unsafe extern "C" fn si_curve_norm(curve: *const SiCurve, kind: u32, s: f64, value: *mut f64) -> SiStatus {
    guard(|| {
        let c = get(curve)?;
        let dst = out(value)?;
        let kind = match kind {
            0 => NormKind::L2,
            1 => NormKind::H1,
            _ => NormKind::Hs(s),
        };
        *dst = c.0.norm(kind)?;
        Ok(())
    })
}

/// New curve with coefficients `theta_k exp(-i 2 pi k phi)`.
#[no_mangle]
pub unsafe extern "C" fn si_curve_shifted(curve: *const SiCurve, phi: f64, shifted: *mut *mut SiCurve) -> SiStatus {
    guard(|| {
        let c = get(curve)?;
        let dst = out(shifted)?;
        if !phi.is_finite() {
            return Err(Error::InvalidArgument("shift must be finite".into()).into());
        }
        boxed(dst, SiCurve(c.0.shifted(phi)));
        Ok(())
    })
}

/// Atomic measure from `n` locations and nonnegative weights.
#[no_mangle]
pub unsafe extern "C" fn si_measure_new_discrete(
    locations: *const f64,
    weights: *const f64,
    n: usize,
    measure: *mut *mut SiMeasure,
) -> SiStatus {
    guard(|| {
        let dst = out(measure)?;
        let (loc, w) = (input(locations, n)?, input(weights, n)?);
        let g = DiscreteMeasure::from_atoms(loc.iter().copied().zip(w.iter().copied()))?;
        boxed(dst, SiMeasure(g.into()));
        Ok(())
    })
}

/// Piecewise-constant density with `bins` equal bins carrying `masses`.
#[no_mangle]
pub unsafe extern "C" fn si_measure_new_grid(masses: *const f64, bins: usize, measure: *mut *mut SiMeasure) -> SiStatus {
    guard(|| {
        let dst = out(measure)?;
        let g = GridDensity::new(input(masses, bins)?.to_vec())?;
        boxed(dst, SiMeasure(g.into()));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn si_measure_free(measure: *mut SiMeasure) {
    if !measure.is_null() {
        drop(Box::from_raw(measure));
    }
}

/// Trigonometric moment `int exp(i 2 pi r x) g(dx)`.
#[no_mangle]
pub unsafe extern "C" fn si_measure_moment(measure: *const SiMeasure, r: i64, re: *mut f64, im: *mut f64) -> SiStatus {
    guard(|| {
        let m = get(measure)?.0.moment(r);
        *out(re)? = m.re;
        *out(im)? = m.im;
        Ok(())
    })
}

/// Simulates `n` observations of the truth `(f0, g0)` up to frequency `l_obs`.
#[no_mangle]
pub unsafe extern "C" fn si_simulate(
    f0: *const SiCurve,
    g0: *const SiMeasure,
    n: usize,
    l_obs: usize,
    seed: u64,
    dataset: *mut *mut SiDataset,
) -> SiStatus {
    guard(|| {
        let cfg = SimConfig::new(get(f0)?.0.clone(), get(g0)?.0.clone(), n, l_obs);
        let dst = out(dataset)?;
        boxed(dst, SiDataset(simulate(&cfg, seed)?));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn si_dataset_free(dataset: *mut SiDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of observations, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn si_dataset_len(dataset: *const SiDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.n())
}

/// Observation cutoff, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn si_dataset_cutoff(dataset: *const SiDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.cutoff())
}

/// Copies observation `j` out; `len` must be `2L + 1`.
#[no_mangle]
pub unsafe extern "C" fn si_dataset_row(
    dataset: *const SiDataset,
    j: usize,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> SiStatus {
    guard(|| {
        let d = &get(dataset)?.0;
        if j >= d.n() {
            return Err(Error::InvalidArgument(format!("observation {j} out of range")).into());
        }
        complex_output(d.row(j), re, im, len)
    })
}

#[no_mangle]
pub unsafe extern "C" fn si_dataset_write(dataset: *const SiDataset, file: *const c_char) -> SiStatus {
    guard(|| Ok(write_dataset(path(file)?, &get(dataset)?.0)?))
}

#[no_mangle]
pub unsafe extern "C" fn si_dataset_read(file: *const c_char, dataset: *mut *mut SiDataset) -> SiStatus {
    guard(|| {
        let d = read_dataset(path(file)?)?;
        boxed(out(dataset)?, SiDataset(d));
        Ok(())
    })
}

/// Total variation between `N_C(z1, I)` and `N_C(z2, I)`.
#[no_mangle]
pub unsafe extern "C" fn si_gauss_tv(
    re1: *const f64,
    im1: *const f64,
    re2: *const f64,
    im2: *const f64,
    len: usize,
    value: *mut f64,
) -> SiStatus {
    guard(|| {
        *out(value)? = gauss_tv(&complex_input(re1, im1, len)?, &complex_input(re2, im2, len)?)?;
        Ok(())
    })
}

/// Hellinger distance between `N_C(z1, I)` and `N_C(z2, I)`.
#[no_mangle]
pub unsafe extern "C" fn si_gauss_hellinger(
    re1: *const f64,
    im1: *const f64,
    re2: *const f64,
    im2: *const f64,
    len: usize,
    value: *mut f64,
) -> SiStatus {
    guard(|| {
        *out(value)? = gauss_hellinger(&complex_input(re1, im1, len)?, &complex_input(re2, im2, len)?)?;
        Ok(())
    })
}

/// Runs the posterior sampler with the default prior on `dataset` and
/// reports the `q`-quantile of the Hellinger distances from the retained
/// draws to `P_{f0, g0}` (`n_mc` Monte-Carlo samples per distance).
#[no_mangle]
pub unsafe extern "C" fn si_posterior_radius(
    dataset: *const SiDataset,
    f0: *const SiCurve,
    g0: *const SiMeasure,
    iterations: usize,
    burn_in: usize,
    thin: usize,
    seed: u64,
    q: f64,
    n_mc: usize,
    radius: *mut f64,
) -> SiStatus {
    guard(|| {
        let d = &get(dataset)?.0;
        let (f0, g0) = (&get(f0)?.0, &get(g0)?.0);
        let dst = out(radius)?;
        let cfg = McmcConfig {
            iterations,
            burn_in,
            thin,
            seed,
            ..McmcConfig::default()
        };
        let chain = run_chain(d, &PriorConfig::default(), (d.n() as f64).max(2.0), &cfg)?;
        *dst = posterior_radius(&chain.samples, f0, g0, q, n_mc, &mut substream(seed, 2))?;
        Ok(())
    })
}
