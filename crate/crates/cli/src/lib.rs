//! Configuration-driven experiment harness for `csbp-core`: sweeps over the
//! measurement count, noise level, and signal model; runtime scaling; oracle
//! comparisons; and the text formats the `csbp` binary reads and writes.

pub mod config;
pub mod experiment;
pub mod files;

/// Harness errors, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Exit code 2.
    #[error("config error: {0}")]
    Config(String),
    /// Exit code 3.
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn config(e: csbp_core::Error) -> Self {
        Self::Config(e.to_string())
    }

    pub fn runtime(e: impl std::fmt::Display) -> Self {
        Self::Runtime(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Config(m) | Self::Runtime(m) => m,
        }
    }
}
