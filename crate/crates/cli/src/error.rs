use ppm_core::evaluation::EvalError;
use ppm_core::eventlog::EventLogError;
use ppm_core::features::FeatureError;
use ppm_core::models::ModelError;
use ppm_core::training::TrainError;
use thiserror::Error;

/// Failure families, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("training error: {0}")]
    Training(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Training(_) => 4,
            CliError::Internal(_) => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<EventLogError> for CliError {
    fn from(e: EventLogError) -> Self {
        match e {
            EventLogError::Io(io) => CliError::Data(format!("cannot read dataset: {io}")),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::Io(io) => CliError::Internal(io.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::ConfigViolation(_) => CliError::Config(e.to_string()),
            ModelError::ShapeMismatch { .. } => CliError::Data(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Model(m) => m.into(),
            TrainError::EmptyTrainingSet | TrainError::EmptyValidationSet => CliError::Data(e.to_string()),
            other => CliError::Training(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::AllCandidatesFailed => CliError::Training(e.to_string()),
            EvalError::EmptyTestSet | EvalError::EmptyCandidateSet | EvalError::NonPositiveLoss(_) => CliError::Data(e.to_string()),
            EvalError::Model(m) => m.into(),
            other => CliError::Internal(other.to_string()),
        }
    }
}
