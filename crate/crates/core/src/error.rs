use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty set has no Hausdorff distance")]
    EmptySet,

    #[error("polyhedron is not simple: vertex {vertex} has {degree} neighbours")]
    NotSimple { vertex: u32, degree: usize },

    #[error("rate missing for ordered edge ({from}, {to})")]
    MissingRate { from: u64, to: u64 },

    #[error("rate constraint violated on edge ({from}, {to}): {detail}")]
    RateConstraint { from: u64, to: u64, detail: String },

    #[error("regularity violated: {0}")]
    NotRegular(String),

    #[error("depth {requested} exceeds available generations ({available})")]
    DepthExceeded { requested: usize, available: usize },

    #[error("series did not reach tolerance after {steps} terms")]
    SeriesNotConverged { steps: usize },

    #[error("adjacency mismatch at vertex {vertex}: {detail}")]
    AdjacencyMismatch { vertex: u64, detail: String },

    #[error("sibling of vertex {0} is not among its neighbours")]
    SiblingNotFound(u64),

    #[error("charts are not adapted: {0}")]
    NotAdapted(String),

    #[error("mixed word depths: expected {expected}, found {found}")]
    MixedDepths { expected: usize, found: usize },

    #[error("root not bracketed in ({lo}, {hi})")]
    NotBracketed { lo: f64, hi: f64 },

    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),

    #[error("matrix is singular")]
    Singular,

    #[error("cross-check failed: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
