use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

/// Failure of a CLI run, classified by the exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("model: {0}")]
    Model(String),
    #[error("numerical: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Model(_) => 4,
            CliError::Numerical(_) => 5,
        }
    }
}

impl From<xshap_core::Error> for CliError {
    fn from(e: xshap_core::Error) -> Self {
        use xshap_core::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidArgument(_) | E::TooManyFeatures { .. } => CliError::Config(msg),
            E::NonPositiveTarget { .. } | E::Shape { .. } => CliError::Data(msg),
            E::NonPositivePrediction { .. } | E::ExternalModel(_) => CliError::Model(msg),
            E::NonPositiveValue { .. } | E::RankDeficient { .. } | E::Explanation(_) => CliError::Numerical(msg),
        }
    }
}
