//! Crate-wide error type.

use std::fmt;
use std::io;

/// Errors reported by solver, corruption, and spectral routines.
#[derive(Debug)]
pub enum Error {
    /// A matrix row has (near-)zero norm and cannot be normalized.
    ZeroRow(usize),
    /// An iterative spectral routine hit its iteration cap.
    NoConvergence { what: &'static str, iters: usize },
    /// Operand dimensions do not agree.
    DimensionMismatch { expected: usize, got: usize, what: &'static str },
    /// The requested quantile set is empty (floor(q * count) = 0).
    EmptyQuantile { q: f64, count: usize },
    /// A file could not be parsed; line numbers are 1-based.
    ParseError { line: usize, msg: String },
    /// Loaded or constructed data violates a type invariant.
    InvariantViolation(String),
    /// Corruption fraction outside [0, 1).
    BetaOutOfRange(f64),
    /// Matrix dimensions unusable for system generation (need m >= n >= 1).
    BadDimensions { m: usize, n: usize },
    /// (q, beta) outside the domain 0 <= beta < q and q + beta < 1.
    ParameterDomain { q: f64, beta: f64 },
    /// Gaussian mass outside (0, 1).
    MassOutOfRange(f64),
    /// Exact subset enumeration would exceed the subset cap.
    TooManySubsets { m: usize, s: usize, cap: u64 },
    /// Subset size outside 1..=m.
    BadSubsetSize { s: usize, m: usize },
    /// Every residual is zero; residual-weighted selection is undefined.
    AllZeroResiduals,
    /// A theorem-step certificate was requested but cannot be produced.
    CertificateUnavailable(String),
    /// A configuration file or flag combination is invalid.
    InvalidConfig(String),
    /// Underlying I/O failure.
    Io(io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ZeroRow(i) => write!(f, "row {i} has zero norm"),
            Error::NoConvergence { what, iters } => {
                write!(f, "{what} did not converge within {iters} iterations")
            }
            Error::DimensionMismatch { expected, got, what } => {
                write!(f, "dimension mismatch for {what}: expected {expected}, got {got}")
            }
            Error::EmptyQuantile { q, count } => {
                write!(f, "quantile set is empty: floor({q} * {count}) = 0")
            }
            Error::ParseError { line, msg } => write!(f, "parse error at line {line}: {msg}"),
            Error::InvariantViolation(msg) => write!(f, "invariant violation: {msg}"),
            Error::BetaOutOfRange(b) => write!(f, "beta = {b} outside [0, 1)"),
            Error::BadDimensions { m, n } => {
                write!(f, "bad dimensions: m = {m}, n = {n} (need m >= n >= 1)")
            }
            Error::ParameterDomain { q, beta } => {
                write!(f, "(q, beta) = ({q}, {beta}) outside 0 <= beta < q, q + beta < 1")
            }
            Error::MassOutOfRange(m) => write!(f, "mass = {m} outside (0, 1)"),
            Error::TooManySubsets { m, s, cap } => {
                write!(f, "C({m}, {s}) exceeds the exact-enumeration cap of {cap} subsets")
            }
            Error::BadSubsetSize { s, m } => write!(f, "subset size {s} outside 1..={m}"),
            Error::AllZeroResiduals => write!(f, "all residuals are zero"),
            Error::CertificateUnavailable(msg) => write!(f, "certificate unavailable: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
