use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Core(#[from] boundary_noise::Error),
    #[error("io: {0}")]
    Io(String),
    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),
    #[error("suite `{0}` failed")]
    SuiteFailed(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl LabError {
    /// 1 for bad input, 2 for a refused or non-converged computation, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        use boundary_noise::Error as E;
        match self {
            LabError::Invalid(_) => 1,
            LabError::Core(E::Refusal(_) | E::NonConvergence(_)) => 2,
            LabError::Core(_) => 1,
            LabError::Io(_) | LabError::ReplayMismatch(_) | LabError::SuiteFailed(_) => 3,
        }
    }
}
