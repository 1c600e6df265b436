//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("basis dimension {requested} exceeds the configured cap {cap}")]
    CapacityExceeded { requested: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("basis/parameter mismatch: {0}")]
    BasisMismatch(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("time grids do not match")]
    GridMismatch,

    #[error("derivative maximum sits at the grid edge (index {0})")]
    EdgeMaximum(usize),

    #[error("trap design violates the frequency hierarchy: {0}")]
    DesignError(String),

    #[error("resonance singularity: {0}")]
    Resonance(String),

    #[error("rescaled curves have no overlapping x-range")]
    NoOverlap,

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
