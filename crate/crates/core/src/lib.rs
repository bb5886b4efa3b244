//! Numerical toolkit for dilute suspensions of rigid balls in Stokes flow.
//!
//! The crate is organised bottom-up:
//!
//! * [`config`] holds the suspension state (ball centres, common radius), the
//!   limit density and the good/bad index partition.
//! * [`kernels`] evaluates the closed-form singular solutions: the Oseen tensor
//!   and the exterior response of a unit ball to an imposed strain.
//! * [`process`] samples centre ensembles (hard-core Poisson, lattices, clustered).
//! * [`audit`] measures the separation and clustering assumptions on a sample.
//! * [`solver`] contains the method of reflections, grid convolutions, the
//!   Einstein effective model and field norms.
//! * [`experiment`] runs ensemble sweeps, fits rates and writes reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod config;
pub mod error;
pub mod experiment;
pub mod fields;
pub mod kernels;
pub mod neighbors;
pub mod process;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};

/// Three-vector used throughout the crate.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Dense 3x3 matrix used for gradients and stresses.
pub type Mat3 = nalgebra::Matrix3<f64>;
