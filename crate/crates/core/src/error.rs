use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

/// Failure categories shared by every module.
///
/// The CLI maps each variant onto a process exit code, so new variants must be
/// given a category in [`LabError::category`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("integration diverged: {0}")]
    IntegrationDiverged(String),

    #[error("step size underflow at t = {t}: {detail}")]
    Stiffness { t: f64, detail: String },

    #[error("invariant failure: {0}")]
    InvariantFailure(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("chord residual too large: {0:.3e}")]
    ChordResidual(f64),
}

/// Coarse error category, stable across releases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCategory {
    ConfigInvalid,
    BudgetExceeded,
    IntegrationDiverged,
    InvariantFailure,
}

impl LabError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            LabError::InvalidInput(_) | LabError::Calibration(_) => ErrorCategory::ConfigInvalid,
            LabError::BudgetExceeded(_) => ErrorCategory::BudgetExceeded,
            LabError::IntegrationDiverged(_) | LabError::Stiffness { .. } => {
                ErrorCategory::IntegrationDiverged
            }
            LabError::InvariantFailure(_) | LabError::ChordResidual(_) => {
                ErrorCategory::InvariantFailure
            }
        }
    }
}

impl ErrorCategory {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorCategory::ConfigInvalid => "config-invalid",
            ErrorCategory::BudgetExceeded => "budget-exceeded",
            ErrorCategory::IntegrationDiverged => "integration-diverged",
            ErrorCategory::InvariantFailure => "invariant-failure",
        }
    }
}
