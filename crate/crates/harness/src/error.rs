use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] euler2d::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config file: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }

    /// 2 for bad input or configuration, 3 for numerical failure, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use euler2d::Error as E;
        match self {
            HarnessError::Config(_) | HarnessError::Toml(_) => 2,
            HarnessError::Core(E::Config(_) | E::InvalidInput(_) | E::Domain(_) | E::Format(_)) => 2,
            HarnessError::Core(E::Numerical(_)) => 3,
            _ => 1,
        }
    }
}
