use thiserror::Error;

/// Everything that can go wrong when validating inputs or sizing a lattice sweep.
#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("probability vector is empty")]
    EmptyProbabilities,

    #[error("p[{index}] = {value} is not in the open interval (0, 1)")]
    NonProbability { index: usize, value: f64 },

    #[error("probabilities sum to {sum}, leaving no remainder mass (need sum < 1)")]
    MassOverflow { sum: f64 },

    #[error("trial count must be at least 1")]
    ZeroTrials,

    #[error("lattice point {point:?} is outside the simplex of width {n}")]
    OutOfSimplex { point: Vec<u64>, n: u64 },

    #[error("point {point:?} is not in the closed unit simplex")]
    OutsideUnitSimplex { point: Vec<f64> },

    #[error("expected {expected} coordinates, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("eta = {0} is not in the open interval (0, 1)")]
    Eta(f64),

    #[error("lattice has {count} points, above the enumeration limit of {limit}")]
    TooLarge { count: u128, limit: u128 },

    #[error("monomial degree {degree} exceeds the supported maximum of {max}")]
    Degree { degree: u32, max: u32 },

    #[error("region kind `{0}` has no continuous counterpart")]
    UnsupportedRegion(&'static str),

    #[error("moment index out of range or invalid: {0}")]
    Index(String),

    #[error("invalid counts: {0}")]
    Counts(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
