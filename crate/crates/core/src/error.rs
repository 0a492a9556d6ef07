use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two operands did not have compatible shapes.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An index was outside its valid range.
    #[error("index {index} out of range 0..{len}")]
    OutOfRange { index: usize, len: usize },

    /// A solver produced a non-finite or exploding residual.
    #[error("numerical divergence at iteration {iteration}: {reason}")]
    Diverged { iteration: usize, reason: String },

    /// A residual trace did not contain enough decaying points to fit a rate.
    #[error("convergence fit needs at least 3 qualifying points, found {found}")]
    TooFewPoints { found: usize },

    /// A residual trace never left its floor, so the fitted rate is pinned at 1.
    #[error("residual trace shows no decay (gamma_hat = 1)")]
    NoDecay,

    /// A ratio was requested for a class that has no members.
    #[error("class {0} has no members; ratio undefined")]
    EmptyClass(u8),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidArgument(alloc::format!($($arg)*))
    };
}

macro_rules! mismatch {
    ($($arg:tt)*) => {
        $crate::error::Error::ShapeMismatch(alloc::format!($($arg)*))
    };
}

pub(crate) use invalid;
pub(crate) use mismatch;
