//! Error type shared by all modules.
//!
//! Diagnostics are stored as `f64` regardless of the scalar type the solver
//! ran with, so the error enum stays non-generic.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unknown hamiltonian id `{0}`")]
    UnknownHamiltonian(String),

    #[error("fixed point did not converge at x={x}, v={v}: residual {residual:e} after {iters} iterations")]
    FixedPoint {
        x: f64,
        v: f64,
        residual: f64,
        iters: usize,
    },

    #[error("legendre transform root find failed at (x={x}, u={u}, v={v})")]
    Legendre { x: f64, u: f64, v: f64 },

    #[error("assumption {which} violated at (x={x}, u={u}, p={p}): got {value}")]
    Assumption {
        which: String,
        x: f64,
        u: f64,
        p: f64,
        value: f64,
    },

    #[error("trajectory diverged near t={t} (state norm {norm:e})")]
    Divergence { t: f64, norm: f64 },

    #[error("target not reachable: {0}")]
    Unreachable(String),

    #[error("solution blow-up near t={t_estimate}")]
    BlowUp { t_estimate: f64 },

    #[error("{op} did not converge after {steps} steps; trailing residuals {history:?}")]
    NoConvergence {
        op: String,
        steps: usize,
        history: Vec<f64>,
    },

    #[error("construction failed on clause `{clause}`: {detail}")]
    Construction { clause: String, detail: String },

    #[error("masked access at node {node}, t={t}")]
    MaskedAccess { node: usize, t: f64 },

    #[error("inconsistent classification: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
