use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph family `{0}` (expected one of G0, G1, G2, G3, G4)")]
    InvalidFamily(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is disconnected; diameter is undefined")]
    Disconnected,

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("kernel evaluated at negative argument {0}")]
    NegativeArgument(f64),

    #[error("quadrature on [{a}, {b}] did not converge: achieved error estimate {achieved:e} > {requested:e}")]
    Quadrature { a: f64, b: f64, achieved: f64, requested: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("state became non-finite at t = {time}")]
    BlowUp { time: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
