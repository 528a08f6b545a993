use thiserror::Error;

use crate::SiteId;

pub type Result<T> = std::result::Result<T, QmnError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QmnError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown site {0}")]
    UnknownSite(SiteId),

    #[error("site {0} appears more than once")]
    DuplicateSite(SiteId),

    #[error("invalid site dimension {dim} for site {site} (must be >= 2)")]
    InvalidDimension { site: SiteId, dim: usize },

    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("positivity violation: minimum eigenvalue {min_eigenvalue:.3e} is below the floor")]
    PositivityViolation { min_eigenvalue: f64 },

    #[error("eigenvalue iteration failed to converge")]
    NoConvergence,

    #[error("cut leaves an empty side")]
    EmptyCut,

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("region B does not shield A from C")]
    NotShielding,

    #[error("{what} = {value} exceeds the cap {cap}")]
    CapExceeded { what: &'static str, value: usize, cap: usize },

    #[error("site {0} is not a qubit")]
    NonQubitSite(SiteId),

    #[error("trace {0:.12} deviates from 1")]
    TraceNotUnit(f64),

    #[error("eigenvalue {0:.3e} is too negative for a density matrix")]
    NegativeEigenvalue(f64),

    #[error("invalid stabilizer generators: {0}")]
    InvalidGenerators(String),

    #[error("operator is not genuine on its support (partial trace over site {site} has norm {norm:.3e})")]
    NotGenuine { site: SiteId, norm: f64 },

    #[error("cumulant on {support:?} crosses A and C (norm {norm:.3e})")]
    CrossCumulant { support: Vec<SiteId>, norm: f64 },

    #[error("graph contains the triangle {0:?}")]
    NotTriangleFree([SiteId; 3]),

    #[error("state is not a Markov network: {0}")]
    NotMarkov(String),

    #[error("decomposition residual {norm:.3e} exceeds tolerance")]
    DecompositionResidual { norm: f64 },

    #[error("invalid merge: {0}")]
    InvalidMerge(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),
}
