use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("evaluation at {z} lies within {tol:e} of a pole")]
    PoleEvaluation { z: Complex64, tol: f64 },

    #[error("zero {0} is not in the open unit disk")]
    InvalidZero(Complex64),

    #[error("constant {0} is not unimodular")]
    NotUnimodular(Complex64),

    #[error("divisor zero {0} is not contained in the dividend")]
    NotDivisible(Complex64),

    #[error("symbol is identically zero")]
    ZeroSymbol,

    #[error("symbol must be analytic: {0}")]
    NotAnalytic(String),

    #[error("product coefficients cannot be bounded below {tol:e}: {reason}")]
    GrammarOverflow { tol: f64, reason: String },

    #[error("truncation bound {bound:e} exceeds tolerance {tol:e}; increase the buffer")]
    BufferTooSmall { bound: f64, tol: f64 },

    #[error("matrix function is not inner (boundary defect {0:e})")]
    NotInner(f64),

    #[error("determinant vanishes identically")]
    DegenerateDeterminant,

    #[error("case hypothesis violated: {0}")]
    CaseHypothesisViolated(String),

    #[error("invalid family parameters: {0}")]
    InvalidFamilyParameters(String),

    #[error("cannot canonicalize symbol: {0}")]
    GrammarParse(String),

    #[error("block sizes differ: {0} vs {1}")]
    BlockMismatch(usize, usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
