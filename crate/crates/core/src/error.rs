use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two fields were defined on incompatible grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Invalid grid or solver configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A field violates an invariant of its kind (e.g. a control outside `[0, 1]`).
    #[error("validation error: {0}")]
    Validation(String),

    /// Malformed field file.
    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    /// A non-finite value appeared while time stepping.
    #[error("numerical error at time level {level}: {msg}")]
    Numerical { level: usize, msg: String },

    /// Level requested outside the range of a radial profile.
    #[error("range error: level {level} outside ({lo}, {hi})")]
    Range { level: f64, lo: f64, hi: f64 },

    /// A profile expected to be strictly decreasing is not.
    #[error("monotonicity violation at cell {cell} of time level {level}")]
    Monotonicity { level: usize, cell: usize },

    /// The volume function is flat across the target volume.
    #[error("degenerate level set: volume function flat on [{lo:e}, {hi:e}]")]
    DegenerateLevel { lo: f64, hi: f64 },

    /// A computed result failed its own certificate or contract.
    #[error("contract failure: {0}")]
    Contract(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
