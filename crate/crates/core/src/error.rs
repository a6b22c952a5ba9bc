use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid p-adic structure: {0}")]
    InvalidStructure(String),

    #[error("{path}: {reason}")]
    InvalidModel { path: String, reason: String },

    #[error("nerve complex is not connected ({components} components)")]
    DisconnectedNerve { components: usize },

    #[error("ball {inner} is not strictly inside {outer}")]
    NotStrictlyInside { outer: String, inner: String },

    #[error("non-monomial measure: {0}")]
    NonMonomial(String),

    #[error("invalid wavelet: {0}")]
    InvalidWavelet(String),

    #[error("invalid cell function at {path}: {reason}")]
    InvalidCellFunction { path: String, reason: String },

    #[error("point {0} is not covered by any chart at this precision")]
    PointNotCovered(String),

    #[error("kernel/mode mismatch: {0}")]
    KernelMode(String),

    #[error("cell expansion would produce more than {limit} cells")]
    TooManyCells { limit: u64 },

    #[error("discriminant zero: the Weierstrass cubic is singular")]
    SingularCurve,

    #[error("p={p}: p=2,3 classification unsupported for bad reduction")]
    UnsupportedClassification { p: u64 },

    #[error("component index required for {0} reduction")]
    MissingComponentIndex(&'static str),

    #[error("unsupported reduction type for manifold construction: {0}")]
    UnsupportedReduction(&'static str),

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
