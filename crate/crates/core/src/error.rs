use thiserror::Error;

use crate::optimizer::TraceRow;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument outside the domain of a function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// Mesh points violate the strict ordering a < ... < 0 < ... < b.
    #[error("invalid layout: {0}")]
    Layout(String),

    #[error("index {index} out of range 0..={max}")]
    Index { index: usize, max: usize },

    /// The gaps delete (almost) all probability mass inside [a, b].
    #[error("degenerate truncation: surviving mass {norm:e} is not positive")]
    DegenerateTruncation { norm: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("objective is not finite at {point:?}")]
    Evaluation { point: Vec<f64> },

    #[error("starting point is infeasible: {0}")]
    Infeasible(String),

    #[error("no feasible decreasing step after {halvings} halvings at iteration {iteration}")]
    Stall {
        iteration: usize,
        halvings: usize,
        trace: Vec<TraceRow>,
    },
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }
}

pub(crate) fn check_finite(func: &'static str, name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(func, format!("{name} = {x} is not finite")))
    }
}
