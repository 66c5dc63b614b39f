//! Constrained Maier–Saupe Q-tensor energies on planar domains.
//!
//! The crate evaluates the singular Maier–Saupe bulk potential through its
//! dual (Boltzmann) moment problem, assembles Landau–de Gennes type elastic
//! energies on finite-difference grids, minimizes the total energy with the
//! singular potential acting as a barrier, and measures the structural
//! properties of the result: eigenvalue physicality, maximum principles for
//! elliptic replacements and Morrey-type energy decay.
//!
//! Data-parallel inner loops (per-node densities, random sample sweeps) run on
//! rayon when the `parallel` feature is enabled and sequentially otherwise.
//! Results are identical either way: every reduction is performed in a fixed
//! order after the parallel map.

pub mod diagnostics;
pub mod elastic;
pub mod error;
pub mod field;
pub mod io;
pub mod minimizer;
pub mod par;
pub mod potential;
pub mod quadrature;
pub mod replacement;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{EigenSystem, PhysRegion, QTensor};
