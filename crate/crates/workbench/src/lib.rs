//! File formats, application workflows and the command-line front end for
//! the rigidity solvers: cyclic polygons, circle-packing completion and
//! layout, built-in test meshes and a randomised invariant audit.

pub mod audit;
pub mod cli;
pub mod document;
pub mod error;
pub mod generators;
pub mod packing;
pub mod polygon;

pub use error::{Result, WorkbenchError};
