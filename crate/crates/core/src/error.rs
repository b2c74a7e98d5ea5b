use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("regime {0}")]
    Regime(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("ill-conditioned input: {0}")]
    Conditioning(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("accuracy target missed: {0}")]
    Accuracy(String),
    #[error("problem too large: {0}")]
    Size(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Domain(_) | Error::Regime(_) | Error::Precondition(_) => 2,
            Error::Size(_) => 3,
            Error::Numerical(_) | Error::Conditioning(_) | Error::Pole(_) | Error::Accuracy(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(format!($($arg)*)))
    };
}
pub(crate) use bail;
