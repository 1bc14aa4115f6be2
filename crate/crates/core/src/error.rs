use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The profit equation's coefficient `1 - λκṼ` is within tolerance of zero.
    #[error("profit equation is degenerate: coefficient {margin:e} is within tolerance of zero")]
    DegenerateDenominator { margin: f64 },

    #[error("no profit root in [{lo}, {hi}] under square-root impact")]
    NoRootFound { lo: f64, hi: f64 },

    #[error("average maturity collapsed to {maturity} (time step {dt})")]
    MaturityCollapse { maturity: f64, dt: f64 },

    #[error("critical capital is undefined without market impact (lambda = 0)")]
    UndefinedCritical,

    #[error("operation requires the {expected} impact model")]
    ImpactModelMismatch { expected: &'static str },

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("`{field}` out of range: {message}")]
    Range { field: String, message: String },

    #[error("invalid sweep axis `{0}`")]
    InvalidAxis(String),
}

impl Error {
    pub(crate) fn range(field: &str, message: impl Into<String>) -> Self {
        Error::Range {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Stable machine-readable name, used by the HTTP API and the C ABI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DegenerateDenominator { .. } => "DegenerateDenominator",
            Error::NoRootFound { .. } => "NoRootFound",
            Error::MaturityCollapse { .. } => "MaturityCollapse",
            Error::UndefinedCritical => "UndefinedCritical",
            Error::ImpactModelMismatch { .. } => "ImpactModelMismatch",
            Error::Schema { .. } => "SchemaError",
            Error::Range { .. } => "RangeError",
            Error::InvalidAxis(_) => "InvalidAxis",
        }
    }

    /// Field path the error refers to, when there is one.
    pub fn field(&self) -> Option<&str> {
        match self {
            Error::Schema { path, .. } => Some(path),
            Error::Range { field, .. } => Some(field),
            Error::InvalidAxis(name) => Some(name),
            _ => None,
        }
    }
}
