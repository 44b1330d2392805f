use thiserror::Error;

use crate::dgspace::Side;

/// Errors raised by mesh construction, assembly, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("point {x} lies outside the domain [{a}, {b}]")]
    OutOfDomain { x: f64, a: f64, b: f64 },

    #[error("no cell on the {side} side of node {node}")]
    NoTrace { node: usize, side: Side },

    #[error("node {node} is not an interior node (expected 1..={last})")]
    NotInterior { node: usize, last: usize },

    #[error("cell {cell} out of range (mesh has {cells} cells)")]
    CellOutOfRange { cell: usize, cells: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular to working precision at pivot {pivot}")]
    Singular { pivot: usize },

    #[error("non-finite operator value {value} in cell {cell} at x = {x}")]
    NonFinite { cell: usize, x: f64, value: f64 },

    #[error("Newton iteration stalled after {iterations} iterations with residual {residual:.3e}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        /// Coefficients of the last iterate.
        last: Vec<f64>,
    },

    #[error("Jacobian is singular at pivot {pivot}; a larger numerical moment may help")]
    SingularJacobian { pivot: usize },

    #[error("scalar root solve failed in cell {cell} at x = {x} (start value {start})")]
    RootSolve { cell: usize, x: f64, start: f64 },

    #[error("non-finite state in stage {stage} of time step {step}; reduce kappa_t")]
    BlowUp { step: usize, stage: usize },

    #[error("time step {step}: {source}")]
    TimeStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown problem '{0}'")]
    UnknownProblem(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
