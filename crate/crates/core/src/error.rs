use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid norm parameters p = {p}, q = {q}: need finite 1 <= p, q with p != q")]
    InvalidNormParams { p: f64, q: f64 },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid step function: {0}")]
    InvalidFunction(String),

    #[error("invalid automorphism: {0}")]
    InvalidAutomorphism(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("family {index}: source length {src} does not match target length {dst}")]
    LengthMismatch { index: usize, src: f64, dst: f64 },

    #[error("structural mismatch: {0}")]
    StructureMismatch(String),

    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

pub type Result<T> = std::result::Result<T, Error>;
