//! Error type shared by every module of the engine.

use thiserror::Error;

/// Errors raised by the engine.
///
/// Every variant corresponds to a documented domain condition; the CLI maps
/// [`Error::Parse`] and [`Error::Schema`] to exit code 2 and everything else
/// to exit code 1.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// The element is not invertible in the localized coefficient ring.
    #[error("not a unit: {0}")]
    NotAUnit(String),
    /// A denominator factor vanishes at the requested evaluation point.
    #[error("pole at evaluation point {0}")]
    PoleAtEvaluationPoint(String),
    /// A monomial index has the wrong size for the symmetric function.
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: u32, got: u32 },
    /// A positive z-power exceeds the requested truncation depth.
    #[error("truncation overflow: z-degree {degree} exceeds depth {depth}")]
    TruncationOverflow { degree: u32, depth: u32 },
    /// Partition size beyond the supported construction range.
    #[error("partition size {0} exceeds the supported maximum of 8")]
    DegreeTooLarge(u32),
    /// Two series over different truncation windows were combined.
    #[error("truncation windows differ")]
    TruncationMismatch,
    /// Plethystic exponential of a series with non-zero constant term.
    #[error("series has non-zero constant term")]
    NonzeroConstantTerm,
    /// Plethystic logarithm/power of a series whose constant term is not 1.
    #[error("series constant term is not 1")]
    ConstantTermNotOne,
    /// Slope factorization of a series whose constant term is not a unit.
    #[error("series constant term is not 1")]
    NonUnitConstant,
    /// The global-factor table lacks an entry for the partition.
    #[error("global factor table has no entry for partition ({0})")]
    MissingTableEntry(String),
    /// Parabolic weights violate the required stability condition.
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    /// Resonant eigenvalues combined with weights outside the allowed regime.
    #[error("resonant eigenvalues require kappa = 1 and weights in Stab")]
    ResonantWithBadWeights,
    /// A flag level lies beyond the leg of the star graph.
    #[error("leg too short at point {point}: level {level} exceeds leg capacity")]
    LegTooShort { point: usize, level: usize },
    /// A brute-force enumeration would exceed the desk-scale cap.
    #[error("out of desk scale: {0}")]
    OutOfDeskScale(String),
    /// A caller-supplied stabilization shift does not exceed the bound.
    #[error("shift N = {given} does not exceed the stabilization bound {bound}")]
    InsufficientShift { given: i64, bound: String },
    /// Invalid domain input (wrong number of points, negative rank, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Malformed textual or JSON input.
    #[error("parse error: {0}")]
    Parse(String),
    /// Input that parses but does not match the expected schema.
    #[error("schema error: {0}")]
    Schema(String),
}

/// Convenience alias.
pub type Result<T> = std::result::Result<T, Error>;
