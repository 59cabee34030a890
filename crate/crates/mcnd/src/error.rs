use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum McndError {
    #[error("malformed instance: {0}")]
    MalformedInstance(String),

    #[error("path {path} for commodity {commodity} is not an adjoined origin-destination walk: {reason}")]
    InfeasiblePath {
        commodity: usize,
        path: usize,
        reason: String,
    },

    #[error("capacity profile error on arc {arc}: {reason}")]
    CapacityProfile { arc: usize, reason: String },

    #[error("commodity {commodity} has no path from origin to destination")]
    Disconnected { commodity: usize },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("invalid generator parameters: {0}")]
    GenParams(String),

    #[error("empty commodity selection for packing coefficients")]
    EmptySelection,

    #[error("degenerate baseline: base bound {base} is not below best objective {best}")]
    DegenerateBaseline { base: f64, best: f64 },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("model is {0:?}; expected an optimal solve")]
    NotOptimal(crate::solver::SolveStatus),

    #[error("arc set too large to enumerate: {paths} paths exceeds the guard of {guard}")]
    EnumerationGuard { paths: usize, guard: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, McndError>;
