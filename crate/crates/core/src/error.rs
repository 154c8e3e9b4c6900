use thiserror::Error;

use crate::heisenberg::Point;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("grid box must have positive finite half-widths")]
    DegenerateBox,
    #[error("grid resolution {0:?} must be at least 3 per axis")]
    Resolution([usize; 3]),
    #[error("expected {expected} grid values, found {found}")]
    ValueCount { expected: usize, found: usize },
    #[error("grids differ in geometry")]
    GridMismatch,
    #[error("coercivity certificate violated at {point:?} (slack {slack})")]
    InvalidCertificate { point: Point, slack: f64 },
    #[error("window radius must be positive and samples per axis odd and >= 5 (radius {radius}, samples {samples})")]
    InvalidWindow { radius: f64, samples: usize },
    #[error("minimizer escaped the search window at {point:?} (radius {radius})")]
    WindowTooSmall { point: Point, radius: f64 },
    #[error("field has no coercivity certificate and no explicit radius was given")]
    NoCertificate,
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit reached")]
    IterationLimit,
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("corpus entry `{0}` has no closed-form reference envelope")]
    NoReference(&'static str),
    #[error("unknown corpus id")]
    UnknownCorpusId,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
