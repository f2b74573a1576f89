use thiserror::Error;

use crate::multi::AssumptionReport;

/// Library-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A value failed construction-time validation.
    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },

    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A precondition of a characterization does not hold, e.g. one action
    /// statewise dominates the other.
    #[error("assumption violated: {0}")]
    Assumption(String),

    /// The richness / single-peakedness assumptions of the multi-alternative
    /// check failed; the report says which one and where.
    #[error("decision problem fails the multi-alternative assumptions: {report}")]
    AssumptionsViolated { report: AssumptionReport },

    /// Both payoffs of a state pair coincide after applying the utility, so
    /// no interior indifference belief exists.
    #[error("degenerate state pair: {0}")]
    DegeneratePair(String),

    /// A witness constructor was called on a relation that holds.
    #[error("the relation holds; no falsifying witness exists")]
    RelationHolds,

    /// The optimality region is lower-dimensional than expected.
    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    /// Fixed reference data turned out to be internally inconsistent.
    #[error("inconsistent data: {0}")]
    DataInconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
