//! Numerical toolkit for steady Stokes and Navier-Stokes flow in the half-space R^n_+:
//! explicit kernels, tent-space and Triebel-Lizorkin norms, potential operators and a
//! small-data Picard solver, together with the property suites that exercise them.

pub mod diffops;
pub mod error;
pub mod families;
pub mod freqspace;
pub mod grid;
pub mod kernels;
pub mod numerics;
pub mod potentials;
pub mod solver;
pub mod suites;
pub mod tentspace;

pub use error::{Error, Result};
