//! Multilevel algebraic multigrid for nonsymmetric sparse systems, built
//! around local approximate ideal restriction (lAIR) with F-F-C Jacobi
//! relaxation, wrapped in right-preconditioned GMRES.
//!
//! The crate also carries a dense diagnostics layer that checks the two-grid
//! algebra (ideal operators, spectral equivalence, projection norms) at small
//! scale, and finite-difference advection-diffusion-reaction generators used
//! by the experiment CLI.

pub mod dense;
pub mod diagnostics;
pub mod error;
pub mod hierarchy;
pub mod krylov;
pub mod mmio;
pub mod problems;
pub mod relax;
pub mod rng;
pub mod sparse;
pub mod strength;
pub mod transfer;

pub use dense::{dense_solve, DenseLu, DenseMatrix};
pub use error::{Error, Result};
pub use hierarchy::{Hierarchy, SetupConfig};
pub use krylov::{gmres, Preconditioner, SolveConfig, SolveReport};
pub use sparse::{BlockLayout, SparseMatrix};
pub use strength::{block_condense, classical_soc, rs_first_pass, CfSplitting, StrengthGraph};
