use thiserror::Error;

/// Errors raised by the bound kernels, the optimizer and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("arrival envelope violated on [{u}, {t}): {amount} bits > sigma + rho*(t-u) = {limit}")]
    EnvelopeViolated {
        u: usize,
        t: usize,
        amount: f64,
        limit: f64,
    },

    #[error("quadrature did not converge at s = {s} (last two estimates {previous:e}, {last:e})")]
    Quadrature { s: f64, previous: f64, last: f64 },

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("deadline unbounded at cap: bound still above eps = {eps:e} at w = {cap}")]
    DeadlineUnbounded { eps: f64, cap: usize },

    #[error("eps = {eps:e} unreachable below the SNR cap of {cap_db} dB")]
    SnrUnreachable { eps: f64, cap_db: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
