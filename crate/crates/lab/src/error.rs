use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] dmc_core::Error),
    #[error("experiment: {0}")]
    Experiment(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("internal: {0}")]
    Internal(String),
}

impl LabError {
    /// 2 for configuration errors, 3 for numerical divergence, 4 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            LabError::Core(e) if e.is_divergence() => 3,
            LabError::Core(_) => 2,
            LabError::Experiment(_) => 3,
            LabError::Io(_) | LabError::Csv(_) | LabError::Internal(_) => 4,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            LabError::Config(_) => "config",
            LabError::Core(e) if e.is_divergence() => "divergence",
            LabError::Core(_) => "config",
            LabError::Experiment(_) => "divergence",
            LabError::Io(_) | LabError::Csv(_) => "io",
            LabError::Internal(_) => "internal",
        }
    }
}
