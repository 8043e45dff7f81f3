use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point outside chart: {0}")]
    Domain(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("inadmissible metric: {0}")]
    Inadmissible(String),
    #[error("invalid specification: {0}")]
    Invalid(String),
    #[error("numerical failure: {message} ({diagnostics})")]
    Numerical { message: String, diagnostics: String },
    #[error("hypothesis not certified: {0}")]
    Refused(String),
    #[error("conjugate point reached at t = {t}")]
    ConjugatePoint { t: f64 },
    #[error("degenerate flag: denominator {denominator:e} below tolerance {threshold:e}")]
    DegenerateFlag { denominator: f64, threshold: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn numerical(message: impl Into<String>, diagnostics: impl Into<String>) -> Self {
        Error::Numerical {
            message: message.into(),
            diagnostics: diagnostics.into(),
        }
    }
}
