//! Numerical construction of mixed-type vortex solutions for the rank-two
//! self-dual Chern-Simons system.
//!
//! The pipeline: a [`model::GaugeModel`] fixes the Cartan pair and vortex
//! data; [`topological`] solves the U(1) problem for `U`; [`liouville`]
//! evaluates the singular Liouville profiles and their kernels; [`approx`]
//! builds the approximate solution; [`solver`] runs the contraction
//! iteration, the reduction in `alpha`, and extracts `beta_eps`.

pub mod approx;
pub mod cli;
pub mod config;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod liouville;
pub mod model;
pub mod quad;
pub mod report;
pub mod solver;
pub mod topological;
pub mod verify;

pub use error::{Error, Result};
