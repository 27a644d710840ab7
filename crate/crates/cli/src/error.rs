use thiserror::Error;

/// Failure of a subcommand, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Lib(#[from] wmlg::Error),

    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// The command ran but a pass criterion failed; the report was emitted.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(e) if e.is_config() => 2,
            CliError::Lib(_) | CliError::Output { .. } | CliError::Failed(_) => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::Lib(wmlg::Error::Config("x".into())).exit_code(), 2);
        assert_eq!(CliError::Lib(wmlg::Error::UnknownTime(1.0)).exit_code(), 1);
        assert_eq!(CliError::Failed("x".into()).exit_code(), 1);
    }
}
