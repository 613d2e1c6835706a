use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown scenario `{name}`; valid scenarios: {valid}")]
    UnknownScenario { name: String, valid: String },

    #[error("config error{}: {message}", field.as_ref().map(|f| format!(" in `{f}`")).unwrap_or_default())]
    Config { field: Option<String>, message: String },

    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },

    #[error("numerical failure: {0}")]
    Numerical(#[from] locc_core::Error),

    #[error("output invariant violated: {0}")]
    Invariant(String),
}

impl HarnessError {
    /// 1 for anything the user can fix in the invocation or config file,
    /// 2 for failures inside the simulation.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::UnknownScenario { .. } | HarnessError::Config { .. } | HarnessError::Io { .. } => 1,
            HarnessError::Numerical(_) | HarnessError::Invariant(_) => 2,
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io { context: context.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
