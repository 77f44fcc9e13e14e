//! Topological charges of circle-valued maps and their optimal transport.
//!
//! The library computes winding numbers and singularities of discretized
//! maps into the circle, evaluates the relaxed Sobolev energy as a
//! minimum-cost transport of the detected integer charges (with a
//! Kantorovich dual certificate), and analyzes branched transport under
//! sublinear concave costs on dyadic source arrays, including the critical
//! exponent `1 - 1/m`.
//!
//! Modules:
//! - [`geometry`]: points, charges, validated configurations.
//! - [`degree`]: loop winding numbers, grid singularity detection,
//!   p-Dirichlet energies.
//! - [`transport`]: primal min-cost transport, brute-force and LP oracles.
//! - [`duality`]: dual potentials, Lipschitz extension, the grid dual
//!   functional.
//! - [`relaxed`]: the assembled relaxed energy for planar maps.
//! - [`branched`]: concave-cost plans on dyadic arrays, regime
//!   classification, and a small branched-plan optimizer.
//! - [`fixtures`]: analytic vortex fixtures shared by tests and the CLI.
//! - [`cli`]: the command-line front end.

pub mod branched;
pub mod cli;
pub mod degree;
pub mod duality;
pub mod error;
pub mod fixtures;
pub mod geometry;
mod numeric;
pub mod relaxed;
mod simplex;
pub mod transport;

pub use error::{Error, Result};
