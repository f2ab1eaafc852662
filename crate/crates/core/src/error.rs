use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({x:.4}, {y:.4}) lies outside the heightfield bounds [{x_min:.4}, {x_max:.4}] x [{y_min:.4}, {y_max:.4}]")]
    OutOfBounds {
        x: f64,
        y: f64,
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("settling did not converge after {sweeps} sweeps (max residual slope {max_slope:.6}, cap {cap:.6})")]
    Convergence {
        sweeps: usize,
        max_slope: f64,
        cap: f64,
    },

    #[error("singular spline basis system")]
    SingularSpline,

    #[error("path planning failed: {0}")]
    Planning(String),

    #[error("query ({x:.3}, {y:.3}, {heading:.4} rad) outside the lookup-table hull")]
    Extrapolation { x: f64, y: f64, heading: f64 },

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            what,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
