//! Fractional perimeters and codimensions on discrete metric measure spaces.
//!
//! The crate works on finite weighted point sets with a resolution scale and
//! provides fractional kernels and perimeters, exact interval energies for
//! fat Cantor sets, Minkowski, Hausdorff and fractional codimension
//! estimators, an exact graph-cut solver for the nonlocal Dirichlet problem,
//! and a hyperbolic filling with its boundary measure checks.

pub mod balls;
pub mod boundary;
pub mod cover;
pub mod error;
pub mod filling;
pub mod geometry;
pub mod index;
pub mod interval;
pub mod kernels;
pub mod minimizer;
pub mod recipes;
pub mod shells;
pub mod space;
pub mod sum;

pub use error::{Error, Result};
pub use space::DiscreteSpace;
