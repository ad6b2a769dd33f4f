use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid resolution: {0}")]
    InvalidResolution(String),

    #[error("length mismatch: expected {expected} node values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("support functions live on different grids")]
    GridMismatch,

    #[error("support function must be positive (min h = {min_h})")]
    NonPositive { min_h: f64 },

    #[error("body is not strictly convex (min principal radius {min_radius:e})")]
    NonConvex { min_radius: f64 },

    #[error("input is not even (antipodally symmetric)")]
    NotEven,

    #[error("normal map is not injective on the grid")]
    NonInjectiveNormalMap,

    #[error("q = {q} outside the supported range {range} for n = {dim}")]
    QOutOfRange { q: f64, dim: usize, range: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
