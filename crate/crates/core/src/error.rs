//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid space exponent p={0}: require 1 < p <= 2")]
    InvalidExponent(f64),

    #[error("invalid dimension {0}: require dim >= 1")]
    InvalidDimension(usize),

    #[error("non-finite entry at index {index}: {value}")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid operator spec: {0}")]
    InvalidSpec(String),

    #[error("point outside operator domain: {0}")]
    Domain(String),

    #[error("graph pair rejected (not an exact member of G({operator})): {detail}")]
    NotGraphMember { operator: String, detail: String },

    #[error("operator {0} is not catalog-certified strongly monotone on this space")]
    NotStronglyMonotone(String),

    #[error("function {0} is not catalog-certified strongly convex with the requested constant")]
    NotStronglyConvex(String),

    #[error("invalid lambda {0}: require lambda > 0")]
    InvalidLambda(f64),

    #[error("empty graph sample")]
    EmptySample,

    #[error("no usable pairs: all sampled pairs are coincident")]
    CoincidentPairs,

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error(
        "solver did not converge: residual {residual:.3e} after {iterations} iterations \
         (best iterate kept)"
    )]
    SolverFailure {
        residual: f64,
        iterations: usize,
        best: Vec<f64>,
    },
}
