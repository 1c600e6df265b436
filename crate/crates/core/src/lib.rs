//! Numerical laboratory for (1+1)D lattice QED and its gauge-field
//! truncation schemes, together with the trapped-ion machinery needed to
//! emulate them as analog quantum simulators.
//!
//! The crate is organized around the pipeline
//!
//! * [`hilbert`] — gauge-invariant basis enumeration and gauge-field
//!   elimination to long-range spin models,
//! * [`models`] — sparse Hamiltonians for lattice QED, the highly occupied
//!   boson model (HOBM), and the S=1/2 quantum link model (QLM),
//! * [`solvers`] — Lanczos ground states and Krylov real-time propagation,
//! * [`scaling`] — finite-size scaling scans, pseudo-critical points, and
//!   scaling-collapse scores,
//! * [`iontrap`] — micro-trap arrays, Coulomb couplings, and localized
//!   phonon-mode engineering,
//! * [`driven`] — laser/microwave-driven effective dynamics, AC-Stark shift
//!   catalogs, and full-drive propagation.

pub mod driven;
pub mod error;
pub mod hilbert;
pub mod iontrap;
pub mod models;
pub mod scaling;
pub mod solvers;
pub mod sparse;

pub use error::{Error, Result};
pub use hilbert::{Basis, BasisState, GaugeBasis, LatticeSpec, LinkKind, SpinModelSpec};
pub use models::{ModelParams, QlmForm};
pub use solvers::TimeSeries;
pub use sparse::SparseOperator;
