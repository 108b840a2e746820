//! Numerical laboratory for the heat equation on R^N.
//!
//! The crate evolves integrable data with the Gaussian representation
//! formula and measures how solutions approach their asymptotic profiles:
//! Gaussians, dipoles, Hermite corrections, and the renormalized
//! Fokker-Planck and Ornstein-Uhlenbeck pictures.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod convolve;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod hermite;
pub mod kernels;
pub mod par;
pub mod regression;
pub mod renormalized;
pub mod semigroup;
pub mod stencil;

pub use error::{HeatError, Result};
pub use grid::{make_grid, norm, quadrature, sample, Diffusivity, Field, GridSpec, NormKind};
pub use semigroup::{evolve, BoundaryKind, InitialData, Method, PointMass, Solver};
