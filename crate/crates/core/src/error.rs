//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced while building models, designing controllers or running
/// simulations. Each variant corresponds to one machine-readable code, see
/// [`PhsError::code`].
#[derive(Debug, Error)]
pub enum PhsError {
    /// Incompatible matrix or vector dimensions.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A scalar parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The plant description violates a model invariant.
    #[error("model error: {0}")]
    Model(String),

    /// The model is valid but outside the supported class.
    #[error("unsupported model: {0}")]
    Unsupported(String),

    /// Inconsistent experiment configuration (e.g. patch count).
    #[error("configuration error: {0}")]
    Config(String),

    /// A matrix that must be invertible is numerically singular.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// The wrong solver was requested for the actuation mode.
    #[error("wrong solver: {0}")]
    WrongSolver(String),

    /// A numerical routine failed to converge or produced no result.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Time integration failed at a specific step.
    #[error("step error at step {step} (dt = {dt}): {message}")]
    Step {
        step: usize,
        dt: f64,
        message: String,
    },

    /// Invalid input to an analysis routine (e.g. empty pole set).
    #[error("input error: {0}")]
    Input(String),
}

impl PhsError {
    /// Stable machine-parsable code for CLI error reporting.
    pub fn code(&self) -> &'static str {
        match self {
            PhsError::Dimension(_) => "dimension",
            PhsError::Parameter(_) => "parameter",
            PhsError::Model(_) => "model",
            PhsError::Unsupported(_) => "unsupported",
            PhsError::Config(_) => "config",
            PhsError::Singular(_) => "singular",
            PhsError::WrongSolver(_) => "wrong-solver",
            PhsError::Numeric(_) => "numeric",
            PhsError::Step { .. } => "step",
            PhsError::Input(_) => "input",
        }
    }
}

pub type Result<T> = std::result::Result<T, PhsError>;
