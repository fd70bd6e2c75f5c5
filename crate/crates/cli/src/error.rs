use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("offline phase failed: {0}")]
    Offline(certisens::Error),
    #[error("certified bound unavailable for {0}")]
    BoundUnavailable(String),
    #[error("tuner fit failed: {0}")]
    TunerFit(certisens::Error),
    #[error("{failed} of {total} properties failed")]
    Validation { failed: usize, total: usize },
    #[error(transparent)]
    Core(#[from] certisens::Error),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Offline(_) => 2,
            CliError::BoundUnavailable(_) => 3,
            CliError::TunerFit(_) => 4,
            CliError::Validation { .. } | CliError::Core(_) | CliError::Other(_) => 1,
        }
    }
}
