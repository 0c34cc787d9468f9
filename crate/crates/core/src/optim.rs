//! First-order updaters over flat parameter vectors: Adam with bias
//! correction, plain stochastic gradient, and heavy-ball momentum.
//!
//! Every updater returns the additive delta to apply to the parameters;
//! the caller owns the parameters themselves.

use ndarray::{Array1, ArrayView1, Zip};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Ascent,
    Descent,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Ascent => 1.0,
            Direction::Descent => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub eta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            eta: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::invalid(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::invalid(format!(
                    "{name} must lie in [0, 1), got {b}"
                )));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Adam moment estimates. `beta1_pow`/`beta2_pow` hold `β^t` as running
/// products, updated once per step.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Array1<f64>,
    second_moment: Array1<f64>,
    t: u64,
    beta1_pow: f64,
    beta2_pow: f64,
}

impl AdamState {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("Adam state dimension must be at least 1"));
        }
        Ok(AdamState {
            m: Array1::zeros(dim),
            second_moment: Array1::zeros(dim),
            t: 0,
            beta1_pow: 1.0,
            beta2_pow: 1.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> ArrayView1<'_, f64> {
        self.m.view()
    }

    pub fn second_moment(&self) -> ArrayView1<'_, f64> {
        self.second_moment.view()
    }

    /// `(m̂, v̂)` for the current step. Both are zero before the first step.
    pub fn bias_corrected(&self) -> (Array1<f64>, Array1<f64>) {
        if self.t == 0 {
            return (Array1::zeros(self.dim()), Array1::zeros(self.dim()));
        }
        (
            &self.m / (1.0 - self.beta1_pow),
            &self.second_moment / (1.0 - self.beta2_pow),
        )
    }

    /// One Adam step on gradient `g`. On error `self` is left untouched.
    pub fn step(
        &self,
        g: ArrayView1<'_, f64>,
        hyper: &AdamHyper,
        direction: Direction,
    ) -> Result<(Array1<f64>, AdamState)> {
        check_gradient(g, self.dim())?;
        let t = self
            .t
            .checked_add(1)
            .ok_or_else(|| Error::invalid("Adam step counter overflow"))?;
        let (b1, b2) = (hyper.beta1, hyper.beta2);
        let beta1_pow = self.beta1_pow * b1;
        let beta2_pow = self.beta2_pow * b2;
        let m = Zip::from(&self.m)
            .and(g)
            .map_collect(|&m, &g| b1 * m + (1.0 - b1) * g);
        let second_moment = Zip::from(&self.second_moment)
            .and(g)
            .map_collect(|&v, &g| b2 * v + (1.0 - b2) * g * g);
        let c1 = 1.0 - beta1_pow;
        let c2 = 1.0 - beta2_pow;
        let scale = direction.sign() * hyper.eta;
        let update = Zip::from(&m)
            .and(&second_moment)
            .map_collect(|&m, &v| scale * (m / c1) / ((v / c2).sqrt() + hyper.epsilon));
        Ok((
            update,
            AdamState {
                m,
                second_moment,
                t,
                beta1_pow,
                beta2_pow,
            },
        ))
    }
}

pub fn adam_init(dim: usize) -> Result<AdamState> {
    AdamState::new(dim)
}

pub fn adam_step(
    state: &AdamState,
    g: ArrayView1<'_, f64>,
    hyper: &AdamHyper,
    direction: Direction,
) -> Result<(Array1<f64>, AdamState)> {
    state.step(g, hyper, direction)
}

/// `±μ·g`.
pub fn sgd_step(g: ArrayView1<'_, f64>, mu: f64, direction: Direction) -> Result<Array1<f64>> {
    check_gradient(g, g.len())?;
    let scale = direction.sign() * mu;
    Ok(g.mapv(|v| scale * v))
}

/// Heavy-ball momentum: `Δ_t = ±μ·g + α·Δ_{t-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumState {
    previous_update: Array1<f64>,
    alpha: f64,
}

impl MomentumState {
    pub fn new(dim: usize, alpha: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid(
                "momentum state dimension must be at least 1",
            ));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::invalid(format!(
                "alpha must lie in [0, 1), got {alpha}"
            )));
        }
        Ok(MomentumState {
            previous_update: Array1::zeros(dim),
            alpha,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn previous_update(&self) -> ArrayView1<'_, f64> {
        self.previous_update.view()
    }

    pub fn step(
        &self,
        g: ArrayView1<'_, f64>,
        mu: f64,
        direction: Direction,
    ) -> Result<(Array1<f64>, MomentumState)> {
        check_gradient(g, self.previous_update.len())?;
        let scale = direction.sign() * mu;
        let alpha = self.alpha;
        let update = Zip::from(g)
            .and(&self.previous_update)
            .map_collect(|&g, &p| scale * g + alpha * p);
        Ok((
            update.clone(),
            MomentumState {
                previous_update: update,
                alpha,
            },
        ))
    }
}

pub fn momentum_step(
    state: &MomentumState,
    g: ArrayView1<'_, f64>,
    mu: f64,
    direction: Direction,
) -> Result<(Array1<f64>, MomentumState)> {
    state.step(g, mu, direction)
}

fn check_gradient(g: ArrayView1<'_, f64>, dim: usize) -> Result<()> {
    if g.len() != dim {
        return Err(Error::invalid(format!(
            "gradient has length {} but the optimizer expects {dim}",
            g.len()
        )));
    }
    if let Some(i) = g.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite gradient entry at {i}")));
    }
    Ok(())
}
