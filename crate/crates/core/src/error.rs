use alloc::string::String;

/// Failure classes shared by every module.
///
/// The CLI maps [`Error::Domain`] to exit code 2 and [`Error::Convergence`]
/// to exit code 3; everything else is reported as a domain error as well.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("physicality violated: {0}")]
    Unphysical(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn convergence(msg: impl Into<String>) -> Self {
        Error::Convergence(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for errors that mean "the iteration did not settle", as opposed
    /// to "the inputs are outside the model's range".
    pub fn is_convergence(&self) -> bool {
        matches!(self, Error::Convergence(_))
    }
}
