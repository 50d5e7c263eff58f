use crate::subset::Subset;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("ground sets differ: {left} vs {right}")]
    GroundSetMismatch { left: usize, right: usize },

    #[error("ground set size {n} exceeds the {max} supported")]
    GroundSetTooLarge { n: usize, max: usize },

    #[error("bitmask {bits:#x} has bits above ground set size {n}")]
    BitsOutOfRange { bits: u64, n: usize },

    #[error("evaluator returned non-finite value {value} for feasible set {set:?}")]
    NonFiniteValue { set: Subset, value: f64 },

    #[error("positive weight {weight} on infeasible set {set:?}")]
    InfeasibleSet { set: Subset, weight: f64 },

    #[error("input outside the {domain} domain: {detail}")]
    DomainViolation { domain: &'static str, detail: String },

    #[error("cardinality bound k={k} out of range for n={n}")]
    CardinalityBound { k: usize, n: usize },

    #[error("support is empty or all weights below tolerance")]
    EmptySupport,

    #[error("support size {size} exceeds cap {cap}")]
    SupportTooLarge { size: usize, cap: usize },

    #[error("matrix not symmetric: max asymmetry {max_asym}")]
    NotSymmetric { max_asym: f64 },

    #[error("dimension mismatch: {detail}")]
    DimensionMismatch { detail: String },

    #[error("requested {k} eigenpairs from an {n}x{n} matrix")]
    TooManyEigenpairs { k: usize, n: usize },

    #[error("linear program did not terminate within {max_pivots} pivots")]
    PivotLimit { max_pivots: usize },

    #[error("basis matrix singular during refactorization")]
    SingularBasis,
}

pub type Result<T> = std::result::Result<T, Error>;
