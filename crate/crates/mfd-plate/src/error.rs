//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown mesh family `{0}` (expected T1..T7)")]
    UnknownFamily(String),

    #[error("subdivision count must be at least 2, got {0}")]
    SubdivisionTooSmall(usize),

    #[error("family {family} requires an even subdivision count, got {n}")]
    OddSubdivision { family: &'static str, n: usize },

    #[error("family {family} is randomized and requires a seed")]
    SeedRequired { family: &'static str },

    #[error("mesh perturbation kept producing tangled cells after {retries} damped retries")]
    TangledMesh { retries: usize },

    #[error("mesh structure error: {0}")]
    MeshStructure(String),

    #[error("mesh failed validation: {0}")]
    MeshValidation(String),

    #[error("cell {cell} is degenerate (area {area:.3e}, diameter {diameter:.3e})")]
    DegenerateCell { cell: usize, area: f64, diameter: f64 },

    #[error("cell {cell} produced an ill-conditioned local system (condition estimate {cond:.3e})")]
    IllConditionedCell { cell: usize, cond: f64 },

    #[error("could not construct positive vertex weights for cell {cell}")]
    NonPositiveWeights { cell: usize },

    #[error("stress tensor must be symmetric")]
    NonSymmetricSigma,

    #[error(
        "stress tensor rank is ambiguous (|eig_min|/|eig_max| = {ratio:.3e} near the \
         classification tolerance); construct it with an explicit rank"
    )]
    AmbiguousSigmaRank { ratio: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    #[error(
        "eigensolver did not converge after {iterations} iterations \
         (worst relative residual {residual:.3e})"
    )]
    EigNonConvergence { iterations: usize, residual: f64 },

    #[error("right-hand-side matrix of the eigenproblem is identically zero")]
    ZeroEigRhs,

    #[error("reference field is identically zero; relative error undefined")]
    ZeroDenominator,

    #[error("{0}")]
    InvalidInput(String),
}
