//! tanh activation and the InfoMax entropy gradients.
//!
//! Both gradients average the data-dependent term over the samples of a
//! block and add the `W^{-T}` (or identity) term once, so a block of one
//! sample gives the per-sample rule and the gradient scale does not grow
//! with the block size.

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::linalg::{self, Lu};

/// The adapted `N×N` separating matrix `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatingMatrix(Array2<f64>);

impl SeparatingMatrix {
    pub fn new(w: Array2<f64>) -> Result<Self> {
        if w.nrows() == 0 || w.nrows() != w.ncols() {
            return Err(Error::invalid(format!(
                "separating matrix must be square and non-empty, got {}x{}",
                w.nrows(),
                w.ncols()
            )));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("separating matrix has non-finite entries"));
        }
        Ok(SeparatingMatrix(w))
    }

    pub fn identity(n: usize) -> Self {
        SeparatingMatrix(Array2::eye(n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

/// `∇_W H(y)` for one block.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMatrix(Array2<f64>);

impl GradientMatrix {
    pub fn new(g: Array2<f64>) -> Result<Self> {
        if g.nrows() != g.ncols() {
            return Err(Error::invalid(format!(
                "gradient must be square, got {}x{}",
                g.nrows(),
                g.ncols()
            )));
        }
        Ok(GradientMatrix(g))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

/// `N×B` window of mixture samples.
#[derive(Debug, Clone, Copy)]
pub struct Block<'a> {
    x: ArrayView2<'a, f64>,
}

impl<'a> Block<'a> {
    pub fn new(x: ArrayView2<'a, f64>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::invalid(format!(
                "block must be non-empty, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        Ok(Block { x })
    }

    pub fn channels(&self) -> usize {
        self.x.nrows()
    }

    pub fn len(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.x.ncols() == 0
    }

    pub fn samples(&self) -> ArrayView2<'a, f64> {
        self.x
    }

    /// `u = W·x`.
    pub fn outputs(&self, w: &SeparatingMatrix) -> Array2<f64> {
        w.0.dot(&self.x)
    }
}

pub fn activation_tanh(u: ArrayView2<'_, f64>) -> Array2<f64> {
    u.mapv(f64::tanh)
}

/// `h''/h'` for `h = tanh`, expressed through `y = tanh(u)`: `Ψ = -2y`.
pub fn psi_tanh(y: ArrayView2<'_, f64>) -> Array2<f64> {
    y.mapv(|v| -2.0 * v)
}

/// `ln(1 - tanh²(u)) = ln sech²(u)`, stable for large `|u|`.
fn ln_tanh_derivative(u: f64) -> f64 {
    let a = u.abs();
    -2.0 * (a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2)
}

fn check_dims(w: &SeparatingMatrix, block: &Block<'_>) -> Result<()> {
    if w.dim() != block.channels() {
        return Err(Error::invalid(format!(
            "W is {0}x{0} but the block has {1} channels",
            w.dim(),
            block.channels()
        )));
    }
    Ok(())
}

/// W-dependent part of the output joint entropy for one block:
/// `ln|det W| + (1/B) Σ_n Σ_i ln h'(u_i[n])`.
pub fn entropy_objective(w: &SeparatingMatrix, block: &Block<'_>) -> Result<f64> {
    check_dims(w, block)?;
    let lu = Lu::factor(w.0.view())?;
    let u = block.outputs(w);
    let data_term = u.iter().map(|&v| ln_tanh_derivative(v)).sum::<f64>() / block.len() as f64;
    Ok(lu.ln_abs_det() + data_term)
}

/// `(2/B)·Σ_n y[n]·z[n]^T`, the block-averaged outer product with `Ψ = -2y`
/// folded into the sign at the call sites.
fn scaled_outer(y: &Array2<f64>, z: ArrayView2<'_, f64>) -> Array2<f64> {
    let scale = 2.0 / y.ncols() as f64;
    y.dot(&z.t()) * scale
}

/// Ascent direction of [`entropy_objective`]: `W^{-T} + (1/B) Σ Ψ xᵀ`.
pub fn gradient_standard(w: &SeparatingMatrix, block: &Block<'_>) -> Result<GradientMatrix> {
    check_dims(w, block)?;
    let inv_t = linalg::inverse_transpose(w.0.view())?;
    let y = activation_tanh(block.outputs(w).view());
    Ok(GradientMatrix(inv_t - scaled_outer(&y, block.x)))
}

/// Natural gradient `(I + (1/B) Σ Ψ uᵀ)·W`; needs no inversion.
pub fn gradient_natural(w: &SeparatingMatrix, block: &Block<'_>) -> Result<GradientMatrix> {
    check_dims(w, block)?;
    let u = block.outputs(w);
    let y = activation_tanh(u.view());
    let mut core = -scaled_outer(&y, u.view());
    core.diag_mut().mapv_inplace(|d| d + 1.0);
    Ok(GradientMatrix(core.dot(&w.0)))
}

/// Mean of [`entropy_objective`] over consecutive blocks of `block_size`
/// samples covering the record (trailing remainder ignored).
pub fn record_entropy(
    w: &SeparatingMatrix,
    x: ArrayView2<'_, f64>,
    block_size: usize,
) -> Result<f64> {
    if block_size == 0 || x.ncols() < block_size {
        return Err(Error::invalid("record shorter than one block"));
    }
    let blocks = x.ncols() / block_size;
    let mut total = 0.0;
    for chunk in x.axis_chunks_iter(Axis(1), block_size).take(blocks) {
        total += entropy_objective(w, &Block::new(chunk)?)?;
    }
    Ok(total / blocks as f64)
}
