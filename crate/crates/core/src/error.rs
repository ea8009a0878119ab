use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::orthopoly::OrthoBasis;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("unknown density name `{0}`")]
    UnknownDensity(String),

    #[error("weights are not normalizable: {0}")]
    NonNormalizable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Working precision ran out before the requested tolerance was met.
    /// `largest_degree` is the highest degree whose leading block met it.
    #[error("precision exhausted: tolerance met only up to degree {largest_degree}")]
    PrecisionExhausted {
        largest_degree: usize,
        partial: Option<Box<OrthoBasis>>,
    },

    #[error("degenerate quadrature: {distinct} distinct nodes, need {needed}")]
    DegenerateQuadrature { distinct: usize, needed: usize },

    #[error("index {index} out of range (max {max})")]
    OutOfRange { index: usize, max: usize },

    #[error("degree must be ≥ 2 (got {0})")]
    DegreeTooLow(usize),

    #[error("root solver did not converge{}: max residual {max_residual:e}", chain.map(|c| alloc::format!(" in chain {c}")).unwrap_or_default())]
    RootsNotConverged {
        chain: Option<usize>,
        max_residual: f64,
        residuals: Vec<f64>,
    },

    #[error("grid rectangle does not cover the disk of radius {radius}")]
    GridTooSmall { radius: f64 },

    #[error("mask touches the rectangle border; inflate the rectangle")]
    MaskTouchesBorder,

    #[error("empty mask")]
    EmptyMask,

    #[error("probe point {index} lies on a measure's support")]
    ProbeOnSupport { index: usize },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("test function support is clipped by the grid")]
    SupportClipped,
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::PrecisionExhausted { .. } => 2,
            Error::RootsNotConverged { .. } => 3,
            _ => 1,
        }
    }
}
