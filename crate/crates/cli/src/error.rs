use faultline_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input: config, flags, or a precondition the user can fix.
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    /// Wraps a core error, prefixing parameter names with `section`.
    pub fn core(section: &str, e: CoreError) -> Self {
        let sep = if section.is_empty() { "" } else { ": " };
        match e {
            CoreError::InvalidParameter { field, reason } => {
                let dot = if section.is_empty() { "" } else { "." };
                CliError::Invalid(format!("{section}{dot}{field}: {reason}"))
            }
            CoreError::ActionModeMismatch { .. }
            | CoreError::NotDiscrete
            | CoreError::InstanceTooLarge { .. }
            | CoreError::TooFewAircraft(_)
            | CoreError::NotPositiveDefinite => CliError::Invalid(format!("{section}{sep}{e}")),
            other => CliError::Runtime(other.to_string()),
        }
    }

    pub fn io(what: impl std::fmt::Display, e: std::io::Error) -> Self {
        CliError::Runtime(format!("{what}: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
