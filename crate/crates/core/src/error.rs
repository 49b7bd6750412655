use thiserror::Error;

/// Errors produced by the discrimination solvers and their inputs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum UsdError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state {index} is not normalized (norm = {norm})")]
    NotNormalized { index: usize, norm: f64 },

    #[error("invalid priors: {0}")]
    InvalidPriors(String),

    #[error("states are linearly dependent (smallest Gram eigenvalue {min_eigenvalue:e})")]
    LinearlyDependent { min_eigenvalue: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("invalid detection probability: {0}")]
    InvalidProbability(String),

    #[error(
        "point is infeasible (smallest eigenvalue of the inconclusive operator {min_eigenvalue:e})"
    )]
    Infeasible { min_eigenvalue: f64 },

    #[error("prior of state {index} is zero; reduce the ensemble first")]
    DegeneratePrior { index: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("{n} states exceed the cap of {cap}")]
    TooManyStates { n: usize, cap: usize },

    #[error("invalid overlap {0}: must lie in [0, 1)")]
    InvalidOverlap(f64),

    #[error("group element {index} is not unitary (deviation {deviation:e})")]
    NotUnitary { index: usize, deviation: f64 },

    #[error("reciprocal states are not generated by the group (deviation {deviation:e})")]
    NotGeometricallyUniform { deviation: f64 },

    #[error("reciprocal vectors are collinear (determinant {determinant:e})")]
    CollinearDuals { determinant: f64 },

    #[error("no equal-probability measurement is optimal for these overlaps: {0}")]
    NoEpmSolution(String),

    #[error("Bloch vector has norm {0}, expected 1")]
    NonUnitBloch(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, UsdError>;
