use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("volatility is zero or not finite, cannot invert")]
    SingularVolatility,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("control is infeasible: support function is infinite at t={time}")]
    InfeasibleControl { time: f64 },

    #[error("density exponent overflow (max exponent {max_exponent:.3e})")]
    DensityOverflow { max_exponent: f64 },

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("explicit scheme unstable: dt={dt:.3e} exceeds limit {limit:.3e}")]
    Stability { dt: f64, limit: f64 },

    #[error("scheme produced non-monotone values: {0}")]
    Scheme(String),

    #[error("policy iteration did not converge after {sweeps} sweeps (residual {residual:.3e})")]
    Iteration { sweeps: usize, residual: f64 },

    #[error("quadrature did not converge (achieved error estimate {estimate:.3e})")]
    Accuracy { estimate: f64 },

    #[error("out of range: {0}")]
    Range(String),

    #[error("ill-conditioned hedge ratio: |second derivative| = {value:.3e} at x={x}")]
    Conditioning { value: f64, x: f64 },

    #[error("path rejection rate {rate:.4} exceeds limit")]
    Rejection { rate: f64 },

    #[error("io error: {0}")]
    Io(String),

    #[error("malformed table: {0}")]
    Table(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Table(e.to_string())
    }
}
