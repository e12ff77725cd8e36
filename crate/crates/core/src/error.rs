use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Errors raised by the numerical routines.
///
/// Block indices stored in variants are 0-based; their `Display` output is
/// 1-based.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A precondition on the inputs was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A restricted subdictionary is numerically rank deficient.
    #[error("rank-deficient subdictionary on blocks {}", OneBased(.blocks))]
    Singular {
        /// Offending block set (0-based).
        blocks: Vec<usize>,
    },
    /// An iterative solver failed to reach its target.
    #[error("solver failure: {0}")]
    Solver(String),
}

/// Shorthand result type.
pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

/// Formats a 0-based block list as `{1, 3, 4}`.
pub(crate) struct OneBased<'a>(pub &'a [usize]);

impl fmt::Display for OneBased<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (n, i) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", i + 1)?;
        }
        f.write_str("}")
    }
}
