use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KlmcError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The step is so small that the noise covariance is numerically singular.
    #[error("degenerate step (zeta = {zeta:e}): {reason}")]
    DegenerateStep { zeta: f64, reason: &'static str },

    #[error("non-finite state or gradient at step {step}")]
    PoisonedState { step: usize },

    #[error("running moments overflowed at step {step}")]
    MomentOverflow { step: usize },

    #[error("parameter condition violated: {0}")]
    ConditionViolated(String),

    #[error("no stationary law: spectral radius {0} >= 1")]
    Unstable(f64),

    #[error("covariance is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("incompatible laws: {0}")]
    IncompatibleLaws(&'static str),
}

pub type Result<T> = std::result::Result<T, KlmcError>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(KlmcError::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}
