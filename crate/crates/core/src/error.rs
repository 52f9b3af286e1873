use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A value was evaluated outside the support `[lo, hi]`.
    #[error("value {value} outside of domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    /// The virtual value is undefined where the density vanishes.
    #[error("density vanishes at v = {value}; virtual value is singular")]
    Singular { value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Rejected while building a distribution, instance or mechanism.
    #[error("construction error: {0}")]
    Construction(String),

    /// A numerical routine failed to reach its tolerance.
    #[error("numerical failure in {what}: {detail}")]
    Numerical { what: &'static str, detail: String },

    #[error("problem too large: {0}")]
    Size(String),

    #[error("invalid mechanism: {0}")]
    InvalidMechanism(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn construction(msg: impl Into<String>) -> Self {
        Error::Construction(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn numerical(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Numerical {
            what,
            detail: detail.into(),
        }
    }

    /// True for errors caused by bad input rather than a failing computation.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Numerical { .. } | Error::Io(_))
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
