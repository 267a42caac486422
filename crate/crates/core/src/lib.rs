//! Numerical laboratory for local statistics of planar Laplace eigenfunctions.
//!
//! Toral eigenfunctions and samples of the random monochromatic wave (Berry)
//! field are cut into rescaled windows; each window is summarized by its
//! local Fourier coefficients against Bessel profiles, and the empirical law
//! of those coefficients is compared with the Gaussian prediction. The crate
//! also counts nodal domains on gridded fields and checks the mass and
//! momentum equidistribution consequences of a Gaussian local limit.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod ergodicity;
pub mod error;
pub mod fields;
pub mod lattice;
pub mod localscope;
pub mod nodal;
pub mod randstats;
pub mod rng;

pub use error::{Result, WaveError};

/// Version of this crate, recorded in experiment reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
