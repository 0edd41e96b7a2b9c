use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numerical(ptchain::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<ptchain::Error> for CliError {
    fn from(e: ptchain::Error) -> Self {
        use ptchain::Error::*;
        match e {
            InvalidConfig(_) | Usage(_) | Domain(_) => CliError::Usage(e.to_string()),
            Convergence(_) | StepSize { .. } => CliError::Numerical(e),
        }
    }
}
