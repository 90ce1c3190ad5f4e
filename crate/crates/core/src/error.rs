use thiserror::Error;

/// Errors produced by the solvers and kernels in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {x} is outside the principal-branch domain [-1/e, inf)")]
    Domain { x: f64 },

    #[error("non-finite input: {0}")]
    NonFinite(f64),

    #[error("invalid bracket [{lo}, {hi}]")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("no sign change over [{lo}, {hi}] (f(lo)={f_lo}, f(hi)={f_hi})")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("root finder hit the iteration cap ({iterations}) with bracket [{lo}, {hi}]")]
    MaxIterations { iterations: usize, lo: f64, hi: f64 },

    #[error("no root of the {kind} relation in ({lo}, {hi}]; relation sign at lo is {sign_at_lo}")]
    NoRoot {
        kind: &'static str,
        lo: f64,
        hi: f64,
        sign_at_lo: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
