use squeezelax_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("integrator failure: {0}")]
    Integrator(CoreError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type AppResult<T> = Result<T, AppError>;

impl AppError {
    pub fn config(msg: impl Into<String>) -> Self {
        AppError::Config(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) | AppError::Io(_) => 2,
            AppError::Verification(_) => 3,
            AppError::Integrator(_) => 4,
        }
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::StepUnderflow { .. }
            | CoreError::NonFiniteDerivative { .. }
            | CoreError::SteadyStateNotConverged { .. }
            | CoreError::CutoffViolation { .. }
            | CoreError::DegenerateSteadyState { .. } => AppError::Integrator(e),
            other => AppError::Config(other.to_string()),
        }
    }
}

impl From<csv::Error> for AppError {
    fn from(e: csv::Error) -> Self {
        AppError::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for AppError {
    fn from(e: serde_json::Error) -> Self {
        AppError::Io(std::io::Error::other(e))
    }
}
