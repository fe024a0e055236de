use std::fmt;

/// A command failure and the process exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config or missing inputs; exit code 2.
    Config(String),
    /// Anything that goes wrong after validation; exit code 1.
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure::Config(message.into())
    }

    pub fn config_from(e: hdalab_core::Error) -> Self {
        Failure::Config(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for Failure {}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<hdalab_core::Error> for Failure {
    fn from(e: hdalab_core::Error) -> Self {
        Failure::Runtime(e.into())
    }
}
