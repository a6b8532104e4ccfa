//! Fock-space complexity of particle-conserving fermionic states.
//!
//! The complexity of a state is `exp(S_P)`, where `S_P` is the Renyi-2 entropy
//! of its Fock-basis probabilities minimized over single-particle bases. The
//! crate provides the Fock-sector machinery, lattice Hamiltonians, eigensolvers,
//! one-body correlation analysis, orbital rotations, the basis optimizer and
//! generic-state baselines.

pub mod analysis;
pub mod complexity;
pub mod error;
pub mod fock;
pub mod generic;
pub mod linalg;
pub mod models;
pub mod onebody;
pub mod rotation;
pub mod spectra;

pub use faer;
pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};
pub use fock::{enumerate_sector, FockSector, LinearOperator, ManyBodyState, Occupation, SparseOperator};
pub use linalg::CMat;
pub use models::{ModelKind, ModelSpec};
pub use rotation::{rotate, RotationGenerator};
