use thiserror::Error;

/// Errors raised by the solvers, synthesizers and the pulse compiler.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RopeError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("non-finite state at t' = {time}")]
    NonFinite { time: f64 },

    /// The requested horizon does not exceed the critical time; the optimum
    /// is the constant-control (INEPT) element.
    #[error("horizon T' = {horizon} is at or below the critical time {critical}: INEPT regime")]
    IneptRegime { horizon: f64, critical: f64 },

    #[error("root solve failed: {0}")]
    RootSolve(String),

    /// The control Hamiltonian cannot be positive for these ratio coordinates.
    #[error("ratio coordinates (a = {a}, b = {b}) lie outside the finite-time regime")]
    OutsideFiniteTimeRegime { a: f64, b: f64 },

    #[error("rf rate {rate_hz} Hz at t = {time_s} s exceeds the cap {cap_hz} Hz")]
    RfCapExceeded {
        time_s: f64,
        rate_hz: f64,
        cap_hz: f64,
    },

    #[error("optimizer did not converge: projected gradient norm {grad_norm:e} after {iterations} iterations")]
    NonConvergence { grad_norm: f64, iterations: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, RopeError>;
