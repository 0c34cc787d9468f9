//! The block-wise separation loop. Each iteration takes the next block of
//! mixtures, computes the entropy gradient at the current `W`, hands its
//! column-stacked vector to the configured optimizer and adds the returned
//! ascent step to the column-stacked `W`.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::infomax::{self, Block, GradientMatrix, SeparatingMatrix};
use crate::metrics::{self, MetricTrace, TraceEntry};
use crate::optim::{AdamHyper, AdamState, Direction, MomentumState};
use crate::signals::{MixingMatrix, SignalMatrix};

/// Any `|W_ij|` above this aborts the run as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Adam,
    Sgd,
    Momentum,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Adam, Algorithm::Sgd, Algorithm::Momentum];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Adam => "adam",
            Algorithm::Sgd => "sgd",
            Algorithm::Momentum => "momentum",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(Algorithm::Adam),
            "sgd" => Ok(Algorithm::Sgd),
            "momentum" => Ok(Algorithm::Momentum),
            other => Err(Error::invalid(format!(
                "unknown algorithm {other:?} (expected adam, sgd or momentum)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientVariant {
    Standard,
    Natural,
}

impl GradientVariant {
    pub fn name(self) -> &'static str {
        match self {
            GradientVariant::Standard => "standard",
            GradientVariant::Natural => "natural",
        }
    }
}

impl std::str::FromStr for GradientVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(GradientVariant::Standard),
            "natural" => Ok(GradientVariant::Natural),
            other => Err(Error::invalid(format!(
                "unknown gradient variant {other:?} (expected standard or natural)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSeparation {
    Identity,
    Explicit(Array2<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub gradient_variant: GradientVariant,
    pub block_size: usize,
    pub epochs: usize,
    pub adam: AdamHyper,
    /// Step size of the SGD and momentum baselines.
    pub mu: f64,
    pub alpha: f64,
    pub seed: u64,
    pub w0: InitialSeparation,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algorithm: Algorithm::Adam,
            gradient_variant: GradientVariant::Natural,
            block_size: 30,
            epochs: 100,
            adam: AdamHyper::default(),
            mu: 0.001,
            alpha: 0.5,
            seed: 0,
            w0: InitialSeparation::Identity,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block_size == 0 {
            return Err(Error::invalid("block_size must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        self.adam.validate()?;
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::invalid(format!(
                "mu must be positive, got {}",
                self.mu
            )));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!(
                "alpha must lie in [0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    fn initial_w(&self, n: usize) -> Result<SeparatingMatrix> {
        match &self.w0 {
            InitialSeparation::Identity => Ok(SeparatingMatrix::identity(n)),
            InitialSeparation::Explicit(w) => {
                if w.nrows() != n || w.ncols() != n {
                    return Err(Error::invalid(format!(
                        "initial W is {}x{} but there are {n} mixtures",
                        w.nrows(),
                        w.ncols()
                    )));
                }
                SeparatingMatrix::new(w.clone())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub w_final: SeparatingMatrix,
    /// One entry per iteration; `pi` is filled at epoch ends when a
    /// reference mixing matrix was supplied.
    pub trace: MetricTrace,
    pub separated: SignalMatrix,
}

/// What the observer sees after iteration `t` has been applied.
#[derive(Debug)]
pub struct Iteration<'a> {
    pub t: usize,
    pub epoch: usize,
    pub w: &'a SeparatingMatrix,
    pub gradient: &'a GradientMatrix,
}

/// Column-stacking `vec(·)`.
pub fn vectorize(g: &GradientMatrix) -> Array1<f64> {
    stack_columns(g.as_array().view())
}

pub fn stack_columns(a: ArrayView2<'_, f64>) -> Array1<f64> {
    a.t().iter().copied().collect()
}

pub fn unstack_columns(v: ArrayView1<'_, f64>, n: usize) -> Result<Array2<f64>> {
    if v.len() != n * n {
        return Err(Error::invalid(format!(
            "vector of length {} cannot be reshaped to {n}x{n}",
            v.len()
        )));
    }
    Ok(Array2::from_shape_fn((n, n), |(i, j)| v[j * n + i]))
}

/// Inverse of [`vectorize`].
pub fn matricize(v: ArrayView1<'_, f64>, n: usize) -> Result<SeparatingMatrix> {
    SeparatingMatrix::new(unstack_columns(v, n)?)
}

/// Number of whole blocks in a record, `⌊L/B⌋`.
pub fn blocks_per_epoch(samples: usize, block_size: usize) -> usize {
    samples.checked_div(block_size).unwrap_or(0)
}

/// Block for 1-based iteration `t`: samples `[kB, (k+1)B)` with
/// `k = (t-1) mod ⌊L/B⌋`. Trailing `L mod B` samples are never used.
pub fn block_at(x: &SignalMatrix, t: usize, block_size: usize) -> Result<Block<'_>> {
    if t == 0 {
        return Err(Error::invalid("iterations are numbered from 1"));
    }
    let nb = blocks_per_epoch(x.samples(), block_size);
    if nb == 0 {
        return Err(Error::invalid(format!(
            "record of {} samples holds no block of {block_size}",
            x.samples()
        )));
    }
    let k = (t - 1) % nb;
    Block::new(
        x.data()
            .slice_move(s![.., k * block_size..(k + 1) * block_size]),
    )
}

/// `u = W·x` over the whole record.
pub fn separate(x: &SignalMatrix, w: &SeparatingMatrix) -> Result<SignalMatrix> {
    if w.dim() != x.channels() {
        return Err(Error::invalid(format!(
            "W is {0}x{0} but there are {1} mixtures",
            w.dim(),
            x.channels()
        )));
    }
    SignalMatrix::new(w.as_array().dot(&x.data()), x.sample_rate_hz())
}

enum Updater {
    Adam(AdamState, AdamHyper),
    Sgd(f64),
    Momentum(MomentumState, f64),
}

impl Updater {
    fn new(config: &RunConfig, dim: usize) -> Result<Self> {
        Ok(match config.algorithm {
            Algorithm::Adam => Updater::Adam(AdamState::new(dim)?, config.adam),
            Algorithm::Sgd => Updater::Sgd(config.mu),
            Algorithm::Momentum => {
                Updater::Momentum(MomentumState::new(dim, config.alpha)?, config.mu)
            }
        })
    }

    fn ascend(&mut self, g: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        match self {
            Updater::Adam(state, hyper) => {
                let (update, next) = state.step(g, hyper, Direction::Ascent)?;
                *state = next;
                Ok(update)
            }
            Updater::Sgd(mu) => crate::optim::sgd_step(g, *mu, Direction::Ascent),
            Updater::Momentum(state, mu) => {
                let (update, next) = state.step(g, *mu, Direction::Ascent)?;
                *state = next;
                Ok(update)
            }
        }
    }
}

/// Runs `N_B·N_ep` iterations and returns the final separating matrix, the
/// per-iteration trace and the separated record. `observer` is called once
/// per iteration.
pub fn run<F>(
    x: &SignalMatrix,
    config: &RunConfig,
    reference: Option<&MixingMatrix>,
    mut observer: F,
) -> Result<RunResult>
where
    F: FnMut(&Iteration<'_>),
{
    config.validate()?;
    let n = x.channels();
    if let Some(a) = reference {
        if a.dim() != n {
            return Err(Error::invalid(format!(
                "reference mixing matrix is {0}x{0} but there are {n} mixtures",
                a.dim()
            )));
        }
    }
    let nb = blocks_per_epoch(x.samples(), config.block_size);
    if nb == 0 {
        return Err(Error::invalid(format!(
            "record of {} samples holds no block of {}",
            x.samples(),
            config.block_size
        )));
    }
    let total = nb
        .checked_mul(config.epochs)
        .ok_or_else(|| Error::invalid("iteration count overflows"))?;

    let mut w = config.initial_w(n)?;
    let mut updater = Updater::new(config, n * n)?;
    let mut trace = MetricTrace::with_capacity(total);

    for t in 1..=total {
        let epoch = (t - 1) / nb + 1;
        let block = block_at(x, t, config.block_size)?;
        let gradient = match config.gradient_variant {
            GradientVariant::Standard => {
                infomax::gradient_standard(&w, &block).map_err(|e| match e {
                    Error::SingularMatrix { .. } => Error::SingularAt { iteration: t },
                    other => other,
                })?
            }
            GradientVariant::Natural => infomax::gradient_natural(&w, &block)?,
        };
        if gradient.as_array().iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                iteration: t,
                reason: "non-finite gradient".into(),
            });
        }

        let update = updater.ascend(vectorize(&gradient).view())?;
        let mut next = w.into_inner();
        next += &unstack_columns(update.view(), n)?;
        if let Some(bad) = next
            .iter()
            .find(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
        {
            return Err(Error::Diverged {
                iteration: t,
                reason: format!("separating matrix entry {bad:e} out of range"),
            });
        }
        w = SeparatingMatrix::new(next)?;

        observer(&Iteration {
            t,
            epoch,
            w: &w,
            gradient: &gradient,
        });

        let pi = match reference {
            Some(a) if t % nb == 0 => Some(metrics::amari_pi(&w, a)?),
            _ => None,
        };
        trace.push(TraceEntry {
            iteration: t,
            epoch,
            pi,
            grad_norm: Some(metrics::grad_norm(&gradient)),
        })?;
    }

    let separated = separate(x, &w)?;
    Ok(RunResult {
        w_final: w,
        trace,
        separated,
    })
}
