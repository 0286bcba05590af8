use thiserror::Error;

/// Errors raised by the kinematic, control and planning layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {what} expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("rotation is not orthonormal (deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("jacobian is in {found} representation, expected {expected}")]
    WrongRepresentation {
        expected: &'static str,
        found: &'static str,
    },

    #[error("invalid selection: {0}")]
    Selection(String),

    #[error("augmented jacobian is identically zero; the chain description is degenerate")]
    ZeroJacobian,

    #[error("time {t} outside profile interval [0, {duration}]")]
    TimeOutOfRange { t: f64, duration: f64 },

    #[error("layer {layer} is outside the plan (valid range {min}..={max})")]
    InvalidLayer { layer: usize, min: usize, max: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("i/o: {0}")]
    Io(String),

    #[error("simulation diverged at t = {t:.4} s: {channel} error {value:.6e} exceeds limit {limit:.6e}")]
    Divergence {
        t: f64,
        channel: &'static str,
        value: f64,
        limit: f64,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { what, expected, got })
    }
}
