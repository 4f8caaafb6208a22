use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {x} lies outside the net domain ({lo}, {hi})")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("eps = {0} is not in (0, 1)")]
    EpsOutOfRange(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient data: {nonzero} nonzero sups, at least {required} required")]
    InsufficientData { nonzero: usize, required: usize },

    #[error("moment system is ill-conditioned (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("quadrature did not converge on [{lo}, {hi}]: error estimate {error:.3e} after {intervals} subintervals")]
    Quadrature {
        lo: f64,
        hi: f64,
        error: f64,
        intervals: usize,
    },

    #[error("window [{lo}, {hi}] too small: need at least [{need_lo}, {need_hi}]")]
    WindowTooSmall {
        lo: f64,
        hi: f64,
        need_lo: f64,
        need_hi: f64,
    },

    #[error("probe inside target set at x = {0}")]
    ProbeInsideTarget(f64),

    #[error("probe at x = {x} leaves only {entries} schedule entries below eps0 = {eps0:.3e}")]
    ProbeTooClose { x: f64, eps0: f64, entries: usize },

    #[error("partition of unity does not cover angle {angle} (denominator {denominator:.3e})")]
    NotCovered { angle: f64, denominator: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
