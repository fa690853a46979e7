use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown port {0}")]
    UnknownPort(usize),

    #[error("facet {index} is degenerate: {reason}")]
    DegenerateFacet { index: usize, reason: String },

    #[error("{endpoint} lies on the plane of facet {index}")]
    OnFacetPlane { endpoint: &'static str, index: usize },

    #[error("transmitter and receiver positions coincide")]
    CoincidentEndpoints,

    #[error("path {0} has a non-finite gain or delay")]
    NonFinitePath(usize),

    #[error("reference magnitude below guard floor at port {port}, tone {tone}")]
    WeakReference { port: usize, tone: usize },

    #[error("tone grid is not uniform at index {0}")]
    NonUniformGrid(usize),

    #[error("series needs at least {needed} records, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("no port has a surviving delay bin")]
    NoSignal,

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("capture format error: {0}")]
    Format(String),

    #[error("{what} hash mismatch: file has {found}, config gives {expected}")]
    HashMismatch {
        what: &'static str,
        expected: String,
        found: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
