//! C ABI over `latent_ssl`.
//!
//! Objects cross the boundary as opaque handles created by `lss_*_new`-style
//! functions and released with the matching `lss_*_free`. Every fallible call
//! returns an [`LssStatus`]; on failure `lss_last_error_message` describes
//! the most recent error on the calling thread. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use latent_ssl::data::sample_dataset;
use latent_ssl::inference::{grid_posterior, kl_error_exact, GridPosterior, GridSpec, LatentPredictor};
use latent_ssl::model::reduce_params;
use latent_ssl::{CoefficientReport, Dataset, Error, FisherSet, MixtureParams, ModelId, PriorSpec};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LssStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Precondition = 4,
    Unsupported = 5,
    NonConvergence = 6,
    NotPositiveDefinite = 7,
    BoundaryLeak = 8,
    EnumerationTooLarge = 9,
    Config = 10,
    Io = 11,
    Internal = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LssModel {
    Model1 = 0,
    Model2 = 1,
    Model3 = 2,
    NoLabel = 3,
}

impl From<LssModel> for ModelId {
    fn from(m: LssModel) -> Self {
        match m {
            LssModel::Model1 => ModelId::Model1,
            LssModel::Model2 => ModelId::Model2,
            LssModel::Model3 => ModelId::Model3,
            LssModel::NoLabel => ModelId::NoLabel,
        }
    }
}

/// Which information matrix [`lss_fisher_matrix`] copies out.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LssFisherKind {
    /// `I_y|x`, 2x2 in the reduced parameters.
    YGivenX = 0,
    /// `I_xy`, 3x3.
    Xy = 1,
    /// `I_x`, 3x3.
    X = 2,
    /// `I_xy - I_x`, 3x3.
    Conditional = 3,
}

/// Two-component scalar mixture `(a1; b1, b2; sigma)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LssMixture {
    pub a1: f64,
    pub b1: f64,
    pub b2: f64,
    pub sigma: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LssCoefficients {
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c_nl: f64,
}

/// Prior hyperparameters; `concentration` is the Dirichlet pair.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LssPrior {
    pub concentration: [f64; 2],
    pub mean_location: f64,
    pub mean_scale: f64,
    pub reduced_scale: f64,
    pub ordered_means: bool,
}

/// Opaque Fisher-information set.
pub struct LssFisher(FisherSet);
/// Opaque dataset.
pub struct LssDataset(Dataset);
/// Opaque grid posterior.
pub struct LssPosterior(GridPosterior);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LssStatus {
    match e {
        Error::Domain(_) => LssStatus::Domain,
        Error::Precondition(_) => LssStatus::Precondition,
        Error::Unsupported(_) => LssStatus::Unsupported,
        Error::NonConvergence { .. } | Error::PoorMixing { .. } | Error::TooManyExclusions { .. } => {
            LssStatus::NonConvergence
        }
        Error::NotPositiveDefinite { .. } | Error::Asymmetric { .. } => LssStatus::NotPositiveDefinite,
        Error::BoundaryLeak { .. } => LssStatus::BoundaryLeak,
        Error::EnumerationTooLarge { .. } => LssStatus::EnumerationTooLarge,
        Error::Config { .. } => LssStatus::Config,
        Error::Io { .. } => LssStatus::Io,
        _ => LssStatus::Internal,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), LssStatus>) -> LssStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LssStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside latent_ssl".into());
            LssStatus::Panic
        }
    }
}

fn fail(e: Error) -> LssStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn nonnull<T>(p: *const T, what: &str) -> Result<(), LssStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        Err(LssStatus::NullPointer)
    } else {
        Ok(())
    }
}

fn mixture(m: &LssMixture) -> Result<MixtureParams, LssStatus> {
    MixtureParams::two_component(m.a1, m.b1, m.b2, m.sigma).map_err(fail)
}

/// Copies the last error message of this thread into `buf` (NUL terminated,
/// truncated to `len` bytes). Returns the full message length, or 0 when
/// there is no error.
///
/// # Safety
/// `buf` must be null or valid for `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn lss_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lss_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The prior used when none is given.
#[no_mangle]
pub extern "C" fn lss_prior_default() -> LssPrior {
    let p = PriorSpec::default();
    LssPrior {
        concentration: [p.concentration[0], p.concentration[1]],
        mean_location: p.mean_location,
        mean_scale: p.mean_scale,
        reduced_scale: p.reduced_scale,
        ordered_means: p.ordered_means,
    }
}

fn prior_of(p: &LssPrior) -> PriorSpec {
    PriorSpec {
        concentration: p.concentration.to_vec(),
        mean_location: p.mean_location,
        mean_scale: p.mean_scale,
        reduced_scale: p.reduced_scale,
        ordered_means: p.ordered_means,
    }
}

/// Reduced parameters `(c1, c2)` of a mixture with `sigma = 1`.
///
/// # Safety
/// `w`, `c1` and `c2` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn lss_reduce_params(w: *const LssMixture, c1: *mut f64, c2: *mut f64) -> LssStatus {
    guard(|| {
        nonnull(w, "w")?;
        nonnull(c1, "c1")?;
        nonnull(c2, "c2")?;
        let r = reduce_params(&mixture(&*w)?).map_err(fail)?;
        *c1 = r.c1;
        *c2 = r.c2;
        Ok(())
    })
}

/// Fisher matrices at `truth` with the default quadrature.
///
/// # Safety
/// `truth` and `out` must be valid pointers; `*out` receives a handle to free
/// with [`lss_fisher_free`].
#[no_mangle]
pub unsafe extern "C" fn lss_fisher_new(truth: *const LssMixture, out: *mut *mut LssFisher) -> LssStatus {
    guard(|| {
        nonnull(truth, "truth")?;
        nonnull(out, "out")?;
        *out = ptr::null_mut();
        let fs = FisherSet::compute_default(&mixture(&*truth)?).map_err(fail)?;
        *out = Box::into_raw(Box::new(LssFisher(fs)));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`lss_fisher_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lss_fisher_free(h: *mut LssFisher) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Copies one information matrix, row-major, into `out` (capacity `len`
/// doubles) and its dimension into `dim`.
///
/// # Safety
/// `h` must be a live handle, `out` valid for `len` doubles, `dim` valid.
#[no_mangle]
pub unsafe extern "C" fn lss_fisher_matrix(
    h: *const LssFisher,
    kind: LssFisherKind,
    out: *mut f64,
    len: usize,
    dim: *mut usize,
) -> LssStatus {
    guard(|| {
        nonnull(h, "handle")?;
        nonnull(out, "out")?;
        nonnull(dim, "dim")?;
        let fs = &(*h).0;
        let m = match kind {
            LssFisherKind::YGivenX => &fs.i_y_given_x,
            LssFisherKind::Xy => &fs.i_xy,
            LssFisherKind::X => &fs.i_x,
            LssFisherKind::Conditional => &fs.i_cond,
        };
        let d = m.dim();
        if len < d * d {
            set_error(format!("buffer holds {len} doubles, need {}", d * d));
            return Err(LssStatus::InvalidArgument);
        }
        for i in 0..d {
            for j in 0..d {
                *out.add(i * d + j) = m[(i, j)];
            }
        }
        *dim = d;
        Ok(())
    })
}

/// Dominant-term coefficients at `alpha`.
///
/// # Safety
/// `h` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lss_coefficients(h: *const LssFisher, alpha: f64, out: *mut LssCoefficients) -> LssStatus {
    guard(|| {
        nonnull(h, "handle")?;
        nonnull(out, "out")?;
        let r = CoefficientReport::compute(&(*h).0, alpha).map_err(fail)?;
        *out = LssCoefficients {
            alpha,
            c1: r.c1,
            c2: r.c2,
            c3: r.c3,
            c_nl: r.c_nl,
        };
        Ok(())
    })
}

/// Samples `n` points from `truth`, the first `alpha * n` of them labeled.
///
/// # Safety
/// `truth` and `out` must be valid; free the handle with [`lss_dataset_free`].
#[no_mangle]
pub unsafe extern "C" fn lss_dataset_sample(
    truth: *const LssMixture,
    n: usize,
    alpha: f64,
    seed: u64,
    out: *mut *mut LssDataset,
) -> LssStatus {
    guard(|| {
        nonnull(truth, "truth")?;
        nonnull(out, "out")?;
        *out = ptr::null_mut();
        let d = sample_dataset(&mixture(&*truth)?, n, alpha, seed).map_err(fail)?;
        *out = Box::into_raw(Box::new(LssDataset(d)));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn lss_dataset_free(h: *mut LssDataset) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Labeled and unlabeled counts.
///
/// # Safety
/// `h`, `labeled` and `unlabeled` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lss_dataset_counts(
    h: *const LssDataset,
    labeled: *mut usize,
    unlabeled: *mut usize,
) -> LssStatus {
    guard(|| {
        nonnull(h, "handle")?;
        nonnull(labeled, "labeled")?;
        nonnull(unlabeled, "unlabeled")?;
        *labeled = (*h).0.n_labeled();
        *unlabeled = (*h).0.n_unlabeled();
        Ok(())
    })
}

/// Grid posterior of `model` on the compact grid.
///
/// # Safety
/// `data`, `prior` and `out` must be valid; free with [`lss_posterior_free`].
#[no_mangle]
pub unsafe extern "C" fn lss_grid_posterior(
    data: *const LssDataset,
    model: LssModel,
    prior: *const LssPrior,
    out: *mut *mut LssPosterior,
) -> LssStatus {
    guard(|| {
        nonnull(data, "data")?;
        nonnull(prior, "prior")?;
        nonnull(out, "out")?;
        *out = ptr::null_mut();
        let post = grid_posterior(model.into(), &(*data).0, &prior_of(&*prior), &GridSpec::compact()).map_err(fail)?;
        *out = Box::into_raw(Box::new(LssPosterior(post)));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a live posterior handle.
#[no_mangle]
pub unsafe extern "C" fn lss_posterior_free(h: *mut LssPosterior) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Log marginal likelihood on the grid.
///
/// # Safety
/// `h` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lss_posterior_log_normalizer(h: *const LssPosterior, out: *mut f64) -> LssStatus {
    guard(|| {
        nonnull(h, "handle")?;
        nonnull(out, "out")?;
        *out = (*h).0.log_normalizer;
        Ok(())
    })
}

/// Exact per-label KL error of the posterior's predictor on `data`, whose
/// hidden labels must not exceed the enumeration limit.
///
/// # Safety
/// All pointers must be valid; `post` must come from the same dataset.
#[no_mangle]
pub unsafe extern "C" fn lss_kl_error_exact(
    data: *const LssDataset,
    post: *const LssPosterior,
    truth: *const LssMixture,
    out: *mut f64,
) -> LssStatus {
    guard(|| {
        nonnull(data, "data")?;
        nonnull(post, "posterior")?;
        nonnull(truth, "truth")?;
        nonnull(out, "out")?;
        let d = &(*data).0;
        let pred = LatentPredictor::from_grid(&(*post).0, d.x2(), None).map_err(fail)?;
        *out = kl_error_exact(d, &mixture(&*truth)?, &pred).map_err(fail)?;
        Ok(())
    })
}
