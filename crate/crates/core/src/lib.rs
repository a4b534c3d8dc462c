//! Boundary-integral solver for the Dirichlet–Poisson problem in a plane
//! perforated by a periodic array of small holes `p + eps * I[phi] + q Z^2`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod field;
pub mod fourier;
pub mod geometry;
pub mod lab;
pub mod lattice_green;
pub mod numerics;
pub mod potentials;
pub mod solver;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{BoundaryShape, ShapeKinematics};
pub use lattice_green::{GreenValue, Lattice};
pub use potentials::{CellIntegral, CorrectedPotential, PeriodicField};
pub use solver::{BoundaryData, DensityKind, DensitySolution, ProblemData};

/// A point of the plane.
pub type Point = [f64; 2];
