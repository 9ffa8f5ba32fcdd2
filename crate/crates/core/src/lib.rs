//! Discrete curvatures, convex energies and prescribed-curvature solvers for
//! bordered triangulated surfaces in Euclidean, hyperbolic and spherical
//! geometry.
//!
//! The crate is organised bottom-up:
//!
//! - [`quadrature`]: adaptive Gauss–Kronrod integration used by every
//!   integral-defined quantity.
//! - [`trig`]: per-triangle trigonometry (cosine laws, angle Jacobians,
//!   auxiliary coordinates, the matrices `P` and `M`, constant extension of
//!   angles to degenerate triples).
//! - [`mesh`]: combinatorial bordered surfaces and metric containers.
//! - [`curvature`]: the `φ_h`, `ψ_h` edge curvatures and the `k_h` vertex
//!   curvature of circle packings.
//! - [`chart`]: the monotone coordinate changes in which the energies are
//!   convex.
//! - [`energy`]: per-triangle gradients/Hessians and total-energy assembly.
//! - [`solver`]: damped Newton minimisation recovering interior lengths or
//!   radii from boundary data and interior curvatures.

pub mod chart;
pub mod curvature;
pub mod energy;
mod error;
pub mod geometry;
pub mod mesh;
pub mod quadrature;
pub mod solver;
pub mod trig;

pub use error::{Error, Result};
pub use geometry::Geometry;
