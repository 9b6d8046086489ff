//! Linear and eigenvalue solvers for symmetric sparse systems.

mod cg;
mod eigen;
pub mod precond;

pub use cg::{solve_spd, SolveOptions, SolveReport};
pub use eigen::{dense_generalized, eig_lowest, EigenOptions, EigenPair};
