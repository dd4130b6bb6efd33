//! Error type shared across the library.

use thiserror::Error;

/// Classification of a weight vector by the per-vertex margins m_v = Σ_{e∋v} x_e/(1+x_e).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Classification {
    /// All margins ≤ 1 and at least one < 1: partition functions are finite.
    Subcritical,
    /// All margins exactly 1: boundary of the finite regime.
    Critical,
    /// Some margin > 1.
    Supercritical,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Classification::Subcritical => write!(f, "subcritical"),
            Classification::Critical => write!(f, "critical"),
            Classification::Supercritical => write!(f, "supercritical"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph has boundary (degree-1 vertices {0:?}); operation requires empty boundary")]
    HasBoundary(Vec<usize>),

    #[error("directed-edge count {n} exceeds dense-storage cap {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("supercritical weights: spectral radius {rho} ≥ 1, partition function diverges")]
    Supercritical { rho: f64 },

    #[error("supercritical torus weights: Σ_i x_i/(1+x_i) = {sum} ≥ 1/2")]
    WeightCondition { sum: f64 },

    #[error("weights not subcritical: classification is {classification}")]
    NotSubcritical { classification: Classification },

    #[error("edge weight {x} out of range: {requirement}")]
    WeightOutOfRange { x: f64, requirement: &'static str },

    #[error("matrix not positive definite: leading minor {minor} has non-positive pivot")]
    NotPositiveDefinite { minor: usize },

    #[error("power iteration did not converge within {iterations} iterations")]
    PowerIterationStalled { iterations: usize },

    #[error("killed random walk is not absorbed: spectral radius of P is {rho} ≥ 1")]
    ChainNotAbsorbed { rho: f64 },

    #[error("state space too large: {states} states exceeds cap {cap}")]
    StateSpaceTooLarge { states: u128, cap: u128 },

    #[error("enumeration memory cap exceeded after {enumerated} loops")]
    MemoryCapExceeded { enumerated: usize },

    #[error("Poisson mass {mass} exceeds sampling cap {cap}")]
    PoissonOverflow { mass: f64, cap: f64 },

    #[error(
        "scan grid gets within {min_gap} of the critical point; \
         stable differentiation needs a gap of at least {required}"
    )]
    GridTooClose { min_gap: f64, required: f64 },

    #[error("too few classes with adequate counts; rerun with more samples ({detail})")]
    InsufficientSamples { detail: String },

    #[error("spin window touches or crosses the reflection line")]
    WindowCrossesLine,

    #[error("loop wraps the torus; it has no planar representative")]
    WrappingLoop,

    #[error("unsupported request: {0}")]
    Unsupported(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
