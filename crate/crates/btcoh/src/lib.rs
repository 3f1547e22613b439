//! Exact-arithmetic toolkit for lattice-class complexes over `Q_p`, the
//! hyperplane arrangements they stratify, broken-circuit (NBC) quotient
//! algebras, and the cohomology of the resulting coefficient systems over
//! `Z`, `Q`, `F_l` and `Z/m`.
//!
//! Everything is computed with arbitrary-precision integers and rationals;
//! no floating point is used anywhere. All normal forms are deterministic
//! so that reports are reproducible byte-for-byte.

pub mod arrangement;
pub mod building;
pub mod cech;
pub mod cli;
pub mod normal_forms;
pub mod os;
pub mod report;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("valuation of zero")]
    ValuationOfZero,
    #[error("field required, got {0}")]
    FieldRequired(String),
    #[error("not a lattice: generators are rank-deficient")]
    NotALattice,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("ball too large: reached {reached} simplices (cap {cap})")]
    BallTooLarge { reached: usize, cap: usize },
    #[error("size cap exceeded: {0}")]
    SizeCapExceeded(String),
    #[error("not a face: {0}")]
    NotAFace(String),
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
    #[error("missing transition map for face pair {0}")]
    MissingTransition(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
