use std::fmt;

use stratincon_core::inconsistency::InconsistencyError;
use stratincon_core::matchgen::GenError;
use stratincon_core::predictor::TrainError;
use stratincon_core::profiles::ProfileError;
use stratincon_core::store::StoreError;
use stratincon_core::telemetry::ParseError;
use stratincon_service::ServeError;

/// A failed command: printed as one `error code=... message="..."` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: String,
    pub message: String,
    pub exit: u8,
}

impl CliError {
    pub fn domain(code: &str, message: impl fmt::Display) -> Self {
        Self {
            code: code.to_string(),
            message: message.to_string(),
            exit: 1,
        }
    }

    pub fn usage(message: impl fmt::Display) -> Self {
        Self {
            code: "usage_error".to_string(),
            message: message.to_string(),
            exit: 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_line = self
            .message
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ");
        write!(f, "error code={} message={:?}", self.code, one_line)
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        Self::domain(e.code(), e)
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        Self::domain(e.code(), e)
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        let code = match e {
            TrainError::EmptyDataset => "empty_dataset",
            TrainError::Config(_) => "invalid_config",
            TrainError::Divergence { .. } => "divergence",
        };
        Self::domain(code, e)
    }
}

impl From<InconsistencyError> for CliError {
    fn from(e: InconsistencyError) -> Self {
        let code = match e {
            InconsistencyError::ModelMismatch => "model_mismatch",
            InconsistencyError::InvalidThreshold(_) => "invalid_threshold",
            _ => "analysis_error",
        };
        Self::domain(code, e)
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        Self::domain("gen_error", e)
    }
}

impl From<ProfileError> for CliError {
    fn from(e: ProfileError) -> Self {
        Self::domain("profile_error", e)
    }
}

impl From<ServeError> for CliError {
    fn from(e: ServeError) -> Self {
        Self::domain(e.code(), e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::domain("io_error", e)
    }
}
