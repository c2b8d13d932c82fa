use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A site or carrier value outside the domain of a local map or a
    /// change of variables.
    #[error("site {site}: {what} (value {value})")]
    Domain {
        site: i64,
        value: f64,
        what: &'static str,
    },

    #[error("increment {value} at index {index} is outside the range of the site map")]
    BadIncrement { index: i64, value: f64 },

    #[error("path is not in the admissible class: {0}")]
    NotAdmissible(String),

    #[error("misaligned window: {0}")]
    Misaligned(String),

    #[error("window grew past the cap of {cap} sites")]
    WindowCap { cap: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("pipelines disagree at step {step}, site {site}: {sweep} vs {transform}")]
    Disagreement {
        step: usize,
        site: i64,
        sweep: f64,
        transform: f64,
    },

    #[error("step {step}: {source}")]
    AtStep { step: usize, source: Box<Error> },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// The innermost error, looking through step annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
