use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum PilotWaveError {
    /// Invalid grid, system, or parameter combination.
    #[error("configuration error: {0}")]
    Config(String),

    /// A field was identically zero (or below threshold everywhere).
    #[error("degenerate field: {0}")]
    DegenerateField(String),

    /// A time stepper refused to run or failed mid-step.
    #[error("stepper error: {0}")]
    Stepper(String),

    /// Non-finite values appeared during propagation.
    #[error("numerical divergence at step {step}: {detail}")]
    Divergence { step: usize, detail: String },

    /// Requested operation is outside the supported problem class.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, PilotWaveError>;

impl PilotWaveError {
    pub fn config(msg: impl Into<String>) -> Self {
        PilotWaveError::Config(msg.into())
    }
}
