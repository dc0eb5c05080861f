use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("spec error: {0}")]
    Spec(String),

    #[error("`{command}` cannot run a {kind} experiment")]
    KindMismatch {
        command: &'static str,
        kind: &'static str,
    },

    #[error(transparent)]
    Core(#[from] seclend_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl HarnessError {
    /// 2 for bad input, 3 for an inadmissible private auction, 4 when the
    /// exhaustive oracle would be too large.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core(seclend_core::Error::Inadmissible(_)) => 3,
            HarnessError::Core(seclend_core::Error::OracleLimit { .. }) => 4,
            _ => 2,
        }
    }
}
