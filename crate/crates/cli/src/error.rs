use recbound::expsum::ExpsumError;
use recbound::jordan::JordanError;
use recbound::phasefn::SourceError;
use recbound::scalar::ScalarError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Output(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Refused(_) => 4,
        }
    }
}

impl From<SourceError> for CliError {
    fn from(e: SourceError) -> Self {
        match e {
            SourceError::Io { .. } | SourceError::BadRecord { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<ExpsumError> for CliError {
    fn from(e: ExpsumError) -> Self {
        if e.is_refusal() {
            return CliError::Refused(e.to_string());
        }
        match e {
            ExpsumError::HorizonTooSmall { .. }
            | ExpsumError::ThetaOutOfRange(_)
            | ExpsumError::InvalidRange { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<ScalarError> for CliError {
    fn from(e: ScalarError) -> Self {
        if e.is_refusal() {
            return CliError::Refused(e.to_string());
        }
        match e {
            ScalarError::Source(s) => s.into(),
            ScalarError::Expsum(s) => s.into(),
            ScalarError::Overflow { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<JordanError> for CliError {
    fn from(e: JordanError) -> Self {
        if e.is_refusal() {
            return CliError::Refused(e.to_string());
        }
        match e {
            JordanError::Scalar(s) => s.into(),
            JordanError::Source(s) => s.into(),
            JordanError::Overflow { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}
