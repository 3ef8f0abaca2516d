use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Pauli symbol {0:?} (expected one of I, X, Y, Z)")]
    InvalidSymbol(char),

    #[error("Pauli label must act on at least one qubit")]
    EmptyLabel,

    #[error("qubit count {k} exceeds the cap of {cap}")]
    QubitCap { k: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("expectation {0} outside [-1, 1]; the state is not a valid density matrix")]
    InvalidExpectation(f64),

    #[error("malformed bitstring {0:?}")]
    MalformedBitstring(String),

    #[error("counts are empty (total shots is zero)")]
    ZeroCounts,

    #[error("every eigenvalue was clipped; no positive part to normalize")]
    AllClipped,

    #[error("bound inputs out of range: {0}")]
    BoundDomain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
