use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The point lies within the pole margin of −e₃, which the chart excludes.
    #[error("point {third:.3e} is within {margin:e} of the excluded pole -e3")]
    Pole { third: f64, margin: f64 },

    /// Rotation or trisection between (nearly) antipodal vectors.
    #[error("vectors are antipodal (inner product {dot:.12}); rotation axis undefined")]
    Antipodal { dot: f64 },

    #[error("norm drift {drift:.3e} before renormalization exceeds {limit}")]
    Stability { drift: f64, limit: f64 },

    #[error("chart magnitude {magnitude:.3e} exceeds cap {cap:e}")]
    ChartBlowup { magnitude: f64, cap: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no convergence after {iterations} iterations: {detail}")]
    NoConvergence {
        iterations: usize,
        achieved: f64,
        detail: String,
    },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
