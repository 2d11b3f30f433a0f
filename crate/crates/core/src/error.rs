use thiserror::Error;

/// Errors raised by the simulator and the bound calculator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QdsError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("signature length {length} exceeds the exact-oracle limit of {limit}")]
    OracleTooLarge { length: usize, limit: usize },

    #[error("invalid sign {0}, expected -1 or +1")]
    InvalidSign(i64),

    #[error("{0}")]
    Runtime(String),
}

impl QdsError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        QdsError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by user-supplied input rather than an internal failure.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, QdsError::Runtime(_))
    }
}

pub type Result<T> = std::result::Result<T, QdsError>;
