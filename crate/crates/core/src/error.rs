use thiserror::Error;

/// Errors raised by model construction, analyses and the file formats.
///
/// Every variant maps onto one of the CLI exit classes through [`Error::exit_code`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("value `{value}` is not in the domain of `{variable}`")]
    UnknownValue { variable: String, value: String },

    #[error("invalid domain for `{variable}`: {reason}")]
    InvalidDomain { variable: String, reason: String },

    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),

    #[error("cycle detected: {}", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("invalid model: {}", .0.join("; "))]
    InvalidModel(Vec<String>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("`{parent}` is not a parent of `{child}`")]
    NotAParent { child: String, parent: String },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("syntax error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unsupported structure: {0}")]
    Unsupported(String),

    #[error("zero-probability conditioning: {0}")]
    ZeroProbability(String),

    #[error("resource limit exceeded: {what} needs {required}, limit is {limit}")]
    ResourceLimit {
        what: String,
        required: String,
        limit: u64,
    },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Unsupported(_) => 2,
            Error::ResourceLimit { .. } => 3,
            _ => 1,
        }
    }

    /// Short machine-readable identifier for reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownVariable(_) => "unknown_variable",
            Error::UnknownValue { .. } => "unknown_value",
            Error::InvalidDomain { .. } => "invalid_domain",
            Error::DuplicateVariable(_) => "duplicate_variable",
            Error::Cycle(_) => "cycle",
            Error::InvalidModel(_) => "invalid_model",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::NotAParent { .. } => "not_a_parent",
            Error::InvalidDistribution(_) => "invalid_distribution",
            Error::Parse { .. } => "parse",
            Error::Unsupported(_) => "unsupported_structure",
            Error::ZeroProbability(_) => "zero_probability",
            Error::ResourceLimit { .. } => "resource_limit",
            Error::Infeasible => "infeasible",
            Error::Unbounded => "unbounded",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
