use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Signal length is not a power of two (at least 2).
    #[error("length {0} is not dyadic (expected 2^(J+1) with J >= 0)")]
    Length(usize),
    /// A value or parameter lies outside its domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Two containers disagree in size.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// A target cannot be reached inside the admissible parameter range.
    #[error("out of range: {0}")]
    Range(String),
    /// Factor design problems (unknown labels, single-level factors, ...).
    #[error("design error: {0}")]
    Design(String),
    /// Objective is not finite at the starting point of an optimization.
    #[error("initialization error: {0}")]
    Init(String),
    /// Brute-force enumeration refused because the instance is too large.
    #[error("refusing enumeration: {0}")]
    TooLarge(String),
    /// A numerical invariant was violated.
    #[error("internal numerical error: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
