use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("window too small: grid point {point:?} lies in cell {cell:?} outside the materialized window")]
    WindowTooSmall { point: Vec<f64>, cell: Vec<i64> },

    #[error("scale not normalized: M = {0}, rescale to M = 1 first")]
    ScaleNotNormalized(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("zero field")]
    ZeroField,

    #[error("no convergence after {iterations} iterations (achieved residual {achieved:.3e})")]
    NoConvergence { iterations: usize, achieved: f64 },

    #[error("unreachable residual: target {target:.3e}, best achieved {best:.3e}")]
    UnreachableResidual { target: f64, best: f64 },

    #[error("degenerate sweep: {usable} usable points, at least 4 required")]
    DegenerateSweep { usable: usize },

    #[error("nonpositive ratio {ratio:e} at delta = {delta}")]
    NonpositiveRatio { delta: f64, ratio: f64 },

    #[error("interval too wide: |I| = {width:.6e} exceeds 2*gamma = {limit:.6e}")]
    IntervalTooWide { width: f64, limit: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag, used on the CLI's diagnostic line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::WindowTooSmall { .. } => "window-too-small",
            Error::ScaleNotNormalized(_) => "scale-not-normalized",
            Error::GridMismatch(_) => "grid-mismatch",
            Error::ZeroField => "zero-field",
            Error::NoConvergence { .. } => "no-convergence",
            Error::UnreachableResidual { .. } => "unreachable-residual",
            Error::DegenerateSweep { .. } => "degenerate-sweep",
            Error::NonpositiveRatio { .. } => "nonpositive-ratio",
            Error::IntervalTooWide { .. } => "interval-too-wide",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }
}
