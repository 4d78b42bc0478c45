use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A parameter lies outside the domain of the operation.
    Domain(String),
    /// A spectral model is ill-formed on the requested sites.
    ModelValidation(String),
    /// Sample data cannot be used by an estimator.
    Data(String),
    /// The operation is well-defined but unavailable for this input, e.g.
    /// exact `p = ∞` simulation for an unbounded model.
    Refused(String),
    /// An input function failed a sanity check.
    Input(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::ModelValidation(msg) => write!(f, "invalid model: {msg}"),
            Error::Data(msg) => write!(f, "data error: {msg}"),
            Error::Refused(msg) => write!(f, "refused: {msg}"),
            Error::Input(msg) => write!(f, "input error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
