//! C ABI over `adam_infomax`.
//!
//! Matrices cross the boundary as row-major `double` arrays. Every entry
//! point returns an [`AiStatus`]; on failure a message for the calling
//! thread is available from [`ai_last_error`]. Panics are caught and
//! reported as `AI_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use adam_infomax::experiment;
use adam_infomax::infomax::{gradient_natural, gradient_standard, Block};
use adam_infomax::metrics::{amari_pi_of, MetricTrace};
use adam_infomax::optim::{AdamHyper, AdamState, Direction};
use adam_infomax::separator::{Algorithm, GradientVariant, InitialSeparation, RunConfig};
use adam_infomax::signals::{hilbert_matrix, MixingMatrix, SignalMatrix};
use adam_infomax::{Error, SeparatingMatrix};
use ndarray::{Array2, ArrayView1, ArrayView2};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AiStatus {
    Ok = 0,
    InvalidArgument = 1,
    SingularMatrix = 2,
    Degenerate = 3,
    Diverged = 4,
    Io = 5,
    Parse = 6,
    NullPointer = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AiAlgorithm {
    Adam = 0,
    Sgd = 1,
    Momentum = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AiGradient {
    Standard = 0,
    Natural = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AiDirection {
    Ascent = 0,
    Descent = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AiTraceKind {
    /// One entry per block update.
    Iterations = 0,
    /// One entry per epoch: PI at the epoch end, mean gradient norm.
    Epochs = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiAdamHyper {
    pub eta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiRunConfig {
    pub algorithm: AiAlgorithm,
    pub gradient: AiGradient,
    pub block_size: usize,
    pub epochs: usize,
    pub adam: AiAdamHyper,
    pub mu: f64,
    pub alpha: f64,
    pub seed: u64,
}

/// `pi` and `grad_norm` are NaN when absent.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiTraceEntry {
    pub iteration: u64,
    pub epoch: u64,
    pub pi: f64,
    pub grad_norm: f64,
}

/// Outcome of [`ai_separate`]. Opaque to C.
pub struct AiResult {
    w: Array2<f64>,
    separated: Array2<f64>,
    iterations: MetricTrace,
    epochs: MetricTrace,
}

/// Adam moment state. Opaque to C.
pub struct AiAdam {
    state: AdamState,
    hyper: AdamHyper,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn status_of(e: &Error) -> AiStatus {
    match e {
        Error::InvalidArgument(_) => AiStatus::InvalidArgument,
        Error::SingularMatrix { .. } | Error::SingularAt { .. } => AiStatus::SingularMatrix,
        Error::Degenerate(_) => AiStatus::Degenerate,
        Error::Diverged { .. } => AiStatus::Diverged,
        Error::Io { .. } | Error::Wav { .. } => AiStatus::Io,
        Error::Parse { .. } => AiStatus::Parse,
    }
}

struct Failure(AiStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(AiStatus::NullPointer, format!("{what} is null"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(AiStatus::InvalidArgument, message.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            AiStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {message}"));
            AiStatus::Panic
        }
    }
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn matrix<'a>(
    p: *const f64,
    rows: usize,
    cols: usize,
    what: &str,
) -> Result<ArrayView2<'a, f64>, Failure> {
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| invalid(format!("{what}: {rows}x{cols} overflows")))?;
    let data = input(p, len, what)?;
    Ok(ArrayView2::from_shape((rows, cols), data).expect("length checked"))
}

fn copy_out(src: &Array2<f64>, out: *mut f64, len: usize, what: &str) -> Result<(), Failure> {
    if len != src.len() {
        return Err(invalid(format!(
            "{what} needs {} values, buffer holds {len}",
            src.len()
        )));
    }
    // SAFETY: caller promises `out` holds `len` writable doubles
    let dst = unsafe { output(out, len, what)? };
    for (d, s) in dst.iter_mut().zip(src.iter()) {
        *d = *s;
    }
    Ok(())
}

impl From<AdamHyper> for AiAdamHyper {
    fn from(h: AdamHyper) -> Self {
        AiAdamHyper {
            eta: h.eta,
            beta1: h.beta1,
            beta2: h.beta2,
            epsilon: h.epsilon,
        }
    }
}

impl From<AiAdamHyper> for AdamHyper {
    fn from(h: AiAdamHyper) -> Self {
        AdamHyper {
            eta: h.eta,
            beta1: h.beta1,
            beta2: h.beta2,
            epsilon: h.epsilon,
        }
    }
}

impl From<AiAlgorithm> for Algorithm {
    fn from(a: AiAlgorithm) -> Self {
        match a {
            AiAlgorithm::Adam => Algorithm::Adam,
            AiAlgorithm::Sgd => Algorithm::Sgd,
            AiAlgorithm::Momentum => Algorithm::Momentum,
        }
    }
}

impl From<Algorithm> for AiAlgorithm {
    fn from(a: Algorithm) -> Self {
        match a {
            Algorithm::Adam => AiAlgorithm::Adam,
            Algorithm::Sgd => AiAlgorithm::Sgd,
            Algorithm::Momentum => AiAlgorithm::Momentum,
        }
    }
}

impl From<AiGradient> for GradientVariant {
    fn from(g: AiGradient) -> Self {
        match g {
            AiGradient::Standard => GradientVariant::Standard,
            AiGradient::Natural => GradientVariant::Natural,
        }
    }
}

impl From<GradientVariant> for AiGradient {
    fn from(g: GradientVariant) -> Self {
        match g {
            GradientVariant::Standard => AiGradient::Standard,
            GradientVariant::Natural => AiGradient::Natural,
        }
    }
}

impl From<AiDirection> for Direction {
    fn from(d: AiDirection) -> Self {
        match d {
            AiDirection::Ascent => Direction::Ascent,
            AiDirection::Descent => Direction::Descent,
        }
    }
}

impl From<&RunConfig> for AiRunConfig {
    fn from(c: &RunConfig) -> Self {
        AiRunConfig {
            algorithm: c.algorithm.into(),
            gradient: c.gradient_variant.into(),
            block_size: c.block_size,
            epochs: c.epochs,
            adam: c.adam.into(),
            mu: c.mu,
            alpha: c.alpha,
            seed: c.seed,
        }
    }
}

impl AiRunConfig {
    fn to_run_config(self, w0: InitialSeparation) -> RunConfig {
        RunConfig {
            algorithm: self.algorithm.into(),
            gradient_variant: self.gradient.into(),
            block_size: self.block_size,
            epochs: self.epochs,
            adam: self.adam.into(),
            mu: self.mu,
            alpha: self.alpha,
            seed: self.seed,
            w0,
        }
    }
}

/// Message for the last failed call on this thread; empty after a
/// successful call. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ai_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ai_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Defaults: Adam, natural gradient, B = 30, 100 epochs, η = 0.001,
/// β1 = 0.9, β2 = 0.999, ε = 1e-8, μ = 0.001, α = 0.5, seed 0.
#[no_mangle]
pub extern "C" fn ai_run_config_default() -> AiRunConfig {
    (&RunConfig::default()).into()
}

/// Per-experiment defaults. `experiment` is 1, 2 or 3.
///
/// # Safety
/// `out` must be null or point to writable memory for one `AiRunConfig`.
#[no_mangle]
pub unsafe extern "C" fn ai_run_config_for_experiment(
    experiment: u32,
    algorithm: AiAlgorithm,
    seed: u64,
    out: *mut AiRunConfig,
) -> AiStatus {
    guard(|| {
        let exp = match experiment {
            1 => experiment::Experiment::Exp1,
            2 => experiment::Experiment::Exp2,
            3 => experiment::Experiment::Exp3,
            other => return Err(invalid(format!("unknown experiment {other}"))),
        };
        if out.is_null() {
            return Err(null("out"));
        }
        let c = experiment::default_config(exp, algorithm.into(), seed);
        *out = (&c).into();
        Ok(())
    })
}

/// Runs the separator on `channels × samples` mixtures `x`.
///
/// `w0` (`channels × channels`) may be null for the identity start.
/// `mixing` (`channels × channels`) may be null; when given, the trace
/// carries the performance index at every epoch end. On success `*out`
/// owns a result that must be released with [`ai_result_free`].
///
/// # Safety
/// Non-null pointers must reference arrays of the stated sizes; `config`
/// and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ai_separate(
    x: *const f64,
    channels: usize,
    samples: usize,
    config: *const AiRunConfig,
    w0: *const f64,
    mixing: *const f64,
    out: *mut *mut AiResult,
) -> AiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if config.is_null() {
            return Err(null("config"));
        }
        if channels == 0 || samples == 0 {
            return Err(invalid(
                "mixtures must have at least one channel and one sample",
            ));
        }
        let x = matrix(x, channels, samples, "x")?;
        let signals = SignalMatrix::new(x.to_owned(), 1.0)?;
        let start = if w0.is_null() {
            InitialSeparation::Identity
        } else {
            InitialSeparation::Explicit(matrix(w0, channels, channels, "w0")?.to_owned())
        };
        let reference = if mixing.is_null() {
            None
        } else {
            Some(MixingMatrix::new(
                matrix(mixing, channels, channels, "mixing")?.to_owned(),
            )?)
        };
        let cfg = (*config).to_run_config(start);
        let (result, epochs) = experiment::run_reduced(&signals, &cfg, reference.as_ref())?;
        let boxed = Box::new(AiResult {
            w: result.w_final.into_inner(),
            separated: result.separated.into_data(),
            iterations: result.trace,
            epochs,
        });
        *out = Box::into_raw(boxed);
        Ok(())
    })
}

/// Number of channels `N`; 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle from [`ai_separate`].
#[no_mangle]
pub unsafe extern "C" fn ai_result_channels(result: *const AiResult) -> usize {
    result.as_ref().map_or(0, |r| r.w.nrows())
}

/// Samples per separated channel; 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle from [`ai_separate`].
#[no_mangle]
pub unsafe extern "C" fn ai_result_samples(result: *const AiResult) -> usize {
    result.as_ref().map_or(0, |r| r.separated.ncols())
}

/// Copies the final `N×N` separating matrix (row-major); `len` must be `N*N`.
///
/// # Safety
/// `result` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ai_result_w(
    result: *const AiResult,
    out: *mut f64,
    len: usize,
) -> AiStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        copy_out(&r.w, out, len, "W")
    })
}

/// Copies the `N×samples` separated signals (row-major).
///
/// # Safety
/// `result` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ai_result_separated(
    result: *const AiResult,
    out: *mut f64,
    len: usize,
) -> AiStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        copy_out(&r.separated, out, len, "separated signals")
    })
}

fn trace_of(r: &AiResult, kind: AiTraceKind) -> &MetricTrace {
    match kind {
        AiTraceKind::Iterations => &r.iterations,
        AiTraceKind::Epochs => &r.epochs,
    }
}

/// Entries in the chosen trace; 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle from [`ai_separate`].
#[no_mangle]
pub unsafe extern "C" fn ai_result_trace_len(result: *const AiResult, kind: AiTraceKind) -> usize {
    result.as_ref().map_or(0, |r| trace_of(r, kind).len())
}

/// Reads trace entry `index` of the chosen trace.
///
/// # Safety
/// `result` must be a live handle; `out` must be valid for one entry.
#[no_mangle]
pub unsafe extern "C" fn ai_result_trace_entry(
    result: *const AiResult,
    kind: AiTraceKind,
    index: usize,
    out: *mut AiTraceEntry,
) -> AiStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let trace = trace_of(r, kind);
        let e = trace.entries().get(index).ok_or_else(|| {
            invalid(format!(
                "trace index {index} out of range (len {})",
                trace.len()
            ))
        })?;
        *out = AiTraceEntry {
            iteration: e.iteration as u64,
            epoch: e.epoch as u64,
            pi: e.pi.unwrap_or(f64::NAN),
            grad_norm: e.grad_norm.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Releases a result. Null is ignored.
///
/// # Safety
/// `result` must be null or a handle from [`ai_separate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ai_result_free(result: *mut AiResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Amari performance index of `Q = W·A` for `n×n` row-major `w` and `a`.
///
/// # Safety
/// `w` and `a` must hold `n*n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ai_amari_pi(
    w: *const f64,
    a: *const f64,
    n: usize,
    out: *mut f64,
) -> AiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let w = matrix(w, n, n, "w")?;
        let a = matrix(a, n, n, "a")?;
        *out = amari_pi_of(w.dot(&a).view())?;
        Ok(())
    })
}

/// Writes the `n×n` Hilbert matrix; `len` must be `n*n`.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ai_hilbert(n: usize, out: *mut f64, len: usize) -> AiStatus {
    guard(|| copy_out(hilbert_matrix(n)?.as_array(), out, len, "Hilbert matrix"))
}

/// Entropy gradient for one `n×b` block `x` at `w`; writes `n×n` to `out`.
///
/// # Safety
/// `w` must hold `n*n`, `x` `n*b` and `out` `n*n` doubles.
#[no_mangle]
pub unsafe extern "C" fn ai_gradient(
    w: *const f64,
    x: *const f64,
    n: usize,
    b: usize,
    variant: AiGradient,
    out: *mut f64,
) -> AiStatus {
    guard(|| {
        let w = SeparatingMatrix::new(matrix(w, n, n, "w")?.to_owned())?;
        let x = matrix(x, n, b, "x")?;
        let block = Block::new(x)?;
        let g = match variant {
            AiGradient::Standard => gradient_standard(&w, &block)?,
            AiGradient::Natural => gradient_natural(&w, &block)?,
        };
        copy_out(g.as_array(), out, n * n, "gradient")
    })
}

/// Adam defaults: η = 0.001, β1 = 0.9, β2 = 0.999, ε = 1e-8.
#[no_mangle]
pub extern "C" fn ai_adam_hyper_default() -> AiAdamHyper {
    AdamHyper::default().into()
}

/// Creates Adam state for `dim` parameters; release with [`ai_adam_free`].
///
/// # Safety
/// `hyper` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ai_adam_new(
    dim: usize,
    hyper: *const AiAdamHyper,
    out: *mut *mut AiAdam,
) -> AiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let hyper: AdamHyper = (*hyper.as_ref().ok_or_else(|| null("hyper"))?).into();
        hyper.validate()?;
        let state = AdamState::new(dim)?;
        *out = Box::into_raw(Box::new(AiAdam { state, hyper }));
        Ok(())
    })
}

/// One Adam step on gradient `g`; writes the additive update to `update`.
/// The state is unchanged when the call fails.
///
/// # Safety
/// `adam` must be a live handle; `g` and `update` must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn ai_adam_step(
    adam: *mut AiAdam,
    g: *const f64,
    dim: usize,
    direction: AiDirection,
    update: *mut f64,
) -> AiStatus {
    guard(|| {
        let a = adam.as_mut().ok_or_else(|| null("adam"))?;
        let g = ArrayView1::from(input(g, dim, "g")?);
        let dst = output(update, dim, "update")?;
        let (u, next) = a.state.step(g, &a.hyper, direction.into())?;
        dst.copy_from_slice(u.as_slice().expect("contiguous"));
        a.state = next;
        Ok(())
    })
}

/// Steps taken so far; 0 for a null handle.
///
/// # Safety
/// `adam` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ai_adam_steps(adam: *const AiAdam) -> u64 {
    adam.as_ref().map_or(0, |a| a.state.steps())
}

/// Releases Adam state. Null is ignored.
///
/// # Safety
/// `adam` must be null or a handle from [`ai_adam_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ai_adam_free(adam: *mut AiAdam) {
    if !adam.is_null() {
        drop(Box::from_raw(adam));
    }
}
