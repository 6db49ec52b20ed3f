use thiserror::Error;

/// Errors produced by the library.
///
/// Two broad families matter to callers: configuration/usage errors
/// (bad parameters, malformed files, dimension mismatches) and invariant
/// violations detected at runtime (a tensor that fails validation, a fed
/// loss outside `[0,1]`, a solver bracket that should be unreachable).
/// The CLI maps the former to exit code 2 and the latter to exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("arm index {arm} out of range for {num_arms} arms")]
    InvalidArm { arm: usize, num_arms: usize },

    #[error("round {t} out of range [1, {horizon}]")]
    InvalidRound { t: usize, horizon: usize },

    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("loss tensor invariant violated at (t={t}, i={arm}): {detail}")]
    TensorInvariant {
        t: usize,
        arm: usize,
        detail: String,
    },

    #[error("feedback loss {loss} outside [0, 1]")]
    FeedbackRange { loss: f64 },

    #[error("non-finite numeric state: {0}")]
    NumericState(String),

    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that indicate corrupted data or a broken runtime
    /// invariant, as opposed to a caller mistake.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(
            self,
            Error::TensorInvariant { .. }
                | Error::FeedbackRange { .. }
                | Error::NumericState(_)
                | Error::InternalInvariant(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
