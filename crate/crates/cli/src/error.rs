use thiserror::Error;

/// Failure of a run, mapped to the process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver error during {context}: {source}")]
    Solver {
        context: String,
        #[source]
        source: magsteer_core::Error,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn solver(context: impl Into<String>) -> impl FnOnce(magsteer_core::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Solver { context, source }
    }

    /// 2 for config and solver errors (monitor failures exit with 1).
    pub fn exit_code(&self) -> i32 {
        2
    }
}
