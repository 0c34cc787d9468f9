//! Blind source separation of instantaneous linear mixtures with the
//! InfoMax criterion and a tanh activation. The separating matrix can be
//! adapted by Adam, plain stochastic gradient, or heavy-ball momentum,
//! using either the standard or the natural entropy gradient.

pub mod config;
pub mod error;
pub mod experiment;
pub mod infomax;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod optim;
pub mod separator;
pub mod signals;

pub use error::{Error, Result};
pub use infomax::{Block, GradientMatrix, SeparatingMatrix};
pub use metrics::{amari_pi, grad_norm, MetricTrace, TraceEntry};
pub use optim::{AdamHyper, AdamState, Direction, MomentumState};
pub use separator::{run, separate, Algorithm, GradientVariant, RunConfig, RunResult};
pub use signals::{MixingMatrix, NoiseSpec, SignalMatrix};
