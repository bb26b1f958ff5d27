use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("tower error: {0}")]
    Tower(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("not representable: {0}")]
    NotRepresentable(String),
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("evaluation failed: {0}")]
    Eval(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
