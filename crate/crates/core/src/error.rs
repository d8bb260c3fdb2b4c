use thiserror::Error;

/// Errors produced by construction, parsing, and numerical routines.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("dilation parameter must be positive, got {0}")]
    NonPositiveDilation(f64),

    #[error("unknown builtin algebra name: {0:?}")]
    UnknownBuiltin(String),

    #[error("elements belong to different algebras")]
    AlgebraMismatch,

    #[error("operation requires the Heisenberg algebra h1, got {0:?}")]
    NotHeisenberg(String),

    #[error("group arithmetic requires real structure constants")]
    ComplexStructure,

    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("unknown identifier {name:?} at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },

    #[error("division by zero while evaluating a coefficient expression")]
    DivisionByZero,

    #[error("invalid algebra specification: {0}")]
    InvalidAlgebra(String),

    #[error("invalid operator specification: {0}")]
    InvalidOperator(String),

    #[error("integer Sobolev norm requires s to be a nonnegative multiple of 2v, got {0}")]
    InvalidIntegerOrder(f64),

    #[error("flow step {step} leaves the non-periodic grid box on axis {axis}")]
    FlowLeavesBox { axis: usize, step: f64 },

    #[error("candidate grid for greedy net exceeds budget ({candidates} > {budget})")]
    NetBudgetExceeded { candidates: usize, budget: usize },

    #[error("evaluation point lies outside the covered region of the partition")]
    OutsideCoveredRegion,

    #[error("empty sample set")]
    EmptySamples,

    #[error("representation matrix requires an adjoint-symmetric element")]
    NotSymmetric,

    #[error("linear solver failed to converge ({0})")]
    SolverBreakdown(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Convenience alias.
pub type Result<T> = std::result::Result<T, CoreError>;
