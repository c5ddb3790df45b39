use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector has zero norm")]
    ZeroNorm,

    /// The radar steering vector lies (numerically) inside the span of the
    /// user channel estimates, so nothing is left after zero-forcing.
    #[error("steering direction lies in the span of the user channel estimates")]
    DegenerateDirection,

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("matrix is ill-conditioned (estimated condition number {estimate:e})")]
    IllConditioned { estimate: f64 },

    #[error("target delay {delay:e} s exceeds the cyclic prefix {cyclic_prefix:e} s")]
    DelayBeyondPrefix { delay: f64, cyclic_prefix: f64 },

    #[error("nonpositive SINR denominator {denominator:e} for user {user}")]
    ModelViolation { user: usize, denominator: f64 },

    #[error("{trials} trials cannot resolve a false-alarm probability of {pfa}")]
    InsufficientTrials { trials: usize, pfa: f64 },

    #[error("delay-Doppler grid is empty")]
    EmptyGrid,
}

impl Error {
    pub(crate) const fn invalid(name: &'static str, reason: &'static str) -> Self {
        Error::InvalidParameter { name, reason }
    }
}
