//! Separation quality (Amari performance index) and convergence (gradient
//! norm) metrics, plus the per-iteration trace they are recorded into.

use ndarray::{ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::infomax::{GradientMatrix, SeparatingMatrix};
use crate::linalg;
use crate::signals::MixingMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub epoch: usize,
    pub pi: Option<f64>,
    pub grad_norm: Option<f64>,
}

/// Sequence of metric samples with strictly increasing iteration numbers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricTrace {
    entries: Vec<TraceEntry>,
}

impl MetricTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        MetricTrace {
            entries: Vec::with_capacity(n),
        }
    }

    pub fn from_entries(entries: Vec<TraceEntry>) -> Result<Self> {
        let mut trace = MetricTrace::with_capacity(entries.len());
        for e in entries {
            trace.push(e)?;
        }
        Ok(trace)
    }

    pub fn push(&mut self, entry: TraceEntry) -> Result<()> {
        if let Some(last) = self.entries.last() {
            if entry.iteration <= last.iteration {
                return Err(Error::invalid(format!(
                    "trace iterations must increase: {} after {}",
                    entry.iteration, last.iteration
                )));
            }
        }
        for (name, v) in [("pi", entry.pi), ("grad_norm", entry.grad_norm)] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(Error::invalid(format!(
                        "non-finite {name} at iteration {}",
                        entry.iteration
                    )));
                }
            }
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[TraceEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last(&self) -> Option<&TraceEntry> {
        self.entries.last()
    }
}

/// Amari performance index of `Q = W·A`.
pub fn amari_pi(w: &SeparatingMatrix, a: &MixingMatrix) -> Result<f64> {
    if w.dim() != a.dim() {
        return Err(Error::invalid(format!(
            "W is {0}x{0} but A is {1}x{1}",
            w.dim(),
            a.dim()
        )));
    }
    amari_pi_of(w.as_array().dot(a.as_array()).view())
}

/// Amari performance index of a global system matrix `Q`: zero iff `Q`
/// is a scaled permutation.
pub fn amari_pi_of(q: ArrayView2<'_, f64>) -> Result<f64> {
    let n = q.nrows();
    if q.ncols() != n {
        return Err(Error::invalid(format!(
            "Q must be square, got {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    if n < 2 {
        return Err(Error::invalid("performance index needs N >= 2"));
    }
    let abs = q.mapv(f64::abs);
    if abs.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("Q has non-finite entries"));
    }

    let mut total = 0.0;
    for (axis, label) in [(Axis(0), "row"), (Axis(1), "column")] {
        for (i, lane) in abs.axis_iter(axis).enumerate() {
            let max = lane.iter().fold(0.0_f64, |m, &v| m.max(v));
            if max == 0.0 {
                return Err(Error::Degenerate(format!("{label} {i} of Q is zero")));
            }
            total += lane.iter().map(|v| v / max).sum::<f64>() - 1.0;
        }
    }
    Ok(total / (n * (n - 1)) as f64)
}

/// Frobenius norm, i.e. the 2-norm of the vectorized gradient.
pub fn grad_norm(g: &GradientMatrix) -> f64 {
    linalg::frobenius_norm(g.as_array().view())
}

/// Collapses a per-iteration trace to one entry per epoch: PI from the
/// epoch's last iteration, gradient norm averaged over the epoch.
pub fn epoch_reduce(trace: &MetricTrace, blocks_per_epoch: usize) -> Result<MetricTrace> {
    if blocks_per_epoch == 0 {
        return Err(Error::invalid("blocks per epoch must be at least 1"));
    }
    if !trace.len().is_multiple_of(blocks_per_epoch) {
        return Err(Error::invalid(format!(
            "trace of {} iterations is not a whole number of {blocks_per_epoch}-block epochs",
            trace.len()
        )));
    }
    let mut out = MetricTrace::with_capacity(trace.len() / blocks_per_epoch);
    for (k, chunk) in trace.entries.chunks(blocks_per_epoch).enumerate() {
        let last = chunk[chunk.len() - 1];
        let norms: Vec<f64> = chunk.iter().filter_map(|e| e.grad_norm).collect();
        let grad_norm = if norms.is_empty() {
            None
        } else {
            Some(norms.iter().sum::<f64>() / norms.len() as f64)
        };
        out.push(TraceEntry {
            iteration: last.iteration,
            epoch: k + 1,
            pi: last.pi,
            grad_norm,
        })?;
    }
    Ok(out)
}
