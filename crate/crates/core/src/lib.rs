//! Finite-element electromagnetics for superconducting-circuit design.
//!
//! The crate is organized as a pipeline: [`mesh`] builds and refines
//! triangle meshes, [`fem`] assembles Lagrange P1/P2 systems, [`solve`]
//! provides the conjugate-gradient and shift-invert Lanczos solvers,
//! [`electrostatics`] and [`eigenmode`] turn solves into capacitance
//! matrices and cavity modes, [`amr`] drives error-estimated refinement,
//! and [`epr`] converts eigenmode data into transmon Hamiltonian
//! parameters. [`analysis`] and [`jobs`] back the command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amr;
pub mod analysis;
pub mod constants;
pub mod eigenmode;
pub mod electrostatics;
pub mod epr;
mod error;
pub mod fem;
pub mod jobs;
pub mod mesh;
pub mod parallel;
pub mod solve;
pub mod sparse;

pub use error::{Error, Result};
