use thiserror::Error;

use crate::equation::C64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} lies below the admissible start {min}")]
    Domain { index: u64, min: u64 },

    #[error("indices {from}..{to} are outside the stored range {start}..{end}")]
    Range { from: u64, to: u64, start: u64, end: u64 },

    #[error("lowest coefficient vanishes at index {index}; the backward step is not invertible")]
    NonInvertibleStep { index: u64 },

    #[error("root finder did not converge after {iterations} iterations")]
    RootsNotConverged { iterations: usize, partial: Vec<C64> },

    #[error("Jordan transform is ill-conditioned (condition estimate {condition:.3e})")]
    IllConditionedStructure { condition: f64 },

    #[error("matrix is singular")]
    Singular,

    #[error("inverse spectral gap {inverse_radius:.3e} does not exceed epsilon {epsilon:.3e}")]
    EnvelopeGap { inverse_radius: f64, epsilon: f64 },

    #[error("series vanishes at index {index}; a lower envelope cannot be fitted")]
    DegenerateSeries { index: u64 },

    #[error("invalid equation: {0}")]
    InvalidEquation(String),

    #[error("operator class violated: {0}")]
    Class(String),

    #[error("division is not exact: residual {max_residual:.3e} at index {index}")]
    InexactDivision { max_residual: f64, index: u64 },

    #[error("subspace iteration for dimension {dim} did not converge (angle {angle:.3e})")]
    NonConverged { dim: usize, angle: f64 },

    #[error("Casorati matrix degenerate at index {index} (condition {condition:.3e})")]
    CasoratianDegenerate { index: u64, condition: f64 },

    #[error("subspace is not transversal to the slower level (smallest angle {angle:.3e})")]
    InvalidSubspace { angle: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
