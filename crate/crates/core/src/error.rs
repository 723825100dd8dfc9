use thiserror::Error;

use crate::flow::FlowTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{kind} index {index} out of range (len {len})")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        len: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("gradient-flow step {step}: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("gradient flow did not meet the stopping rule within {} steps", .trace.steps.len())]
    FlowNotConverged { trace: Box<FlowTrace> },

    #[error("point ({x}, {y}) lies outside triangle {triangle}")]
    PointOutsideTriangle { triangle: usize, x: f64, y: f64 },

    #[error("degenerate element geometry")]
    DegenerateElement,

    #[error("unsupported cut configuration: {0}")]
    UnsupportedCut(&'static str),

    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
