//! Numerical laboratory for the Dirichlet problem of the infinity Laplace
//! equation on grid-masked domains, together with the quantitative pieces of
//! a boundary Hölder regularity argument: a uniform exterior-cap condition,
//! barrier data and the decay factor `mu` it produces, exponent selection and
//! the decay audit with explicit constants.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, configuration
//! and the command line live in the `inflab` companion crate.
//!
//! Modules, bottom-up:
//!
//! * [`grid`]: grid specs, rasterized domain masks, grid functions, regions.
//! * [`solver`]: the wide-stencil midrange scheme `u = (max + min) / 2`.
//! * [`geometry`]: the uniform cap condition and a catalog of sample domains.
//! * [`barrier`]: barrier boundary data, rotations and the `mu` estimate.
//! * [`regularity`]: exponent selection, decay audit, Harnack ratio.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod barrier;
pub mod domain;
mod error;
pub mod geometry;
pub mod grid;
pub mod linalg;
pub mod regularity;
pub mod solver;

pub use error::{Error, Result};
