use thiserror::Error;

pub type Result<T> = std::result::Result<T, KmError>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KmError {
    #[error("rejected input: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// A stateful protocol (NewRun/Diff, stream update/query) was driven out of order.
    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("not ready: {0}")]
    NotReady(String),

    /// Residues or fingerprints disagree in a way only a hash collision or a bug can explain.
    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("lag {lag} exceeded the buffer bound {bound}")]
    LagOverflow { lag: usize, bound: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl KmError {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        KmError::Input(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        KmError::Config(msg.into())
    }

    pub(crate) fn protocol(msg: impl Into<String>) -> Self {
        KmError::Protocol(msg.into())
    }
}
