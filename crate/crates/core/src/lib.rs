//! Unilateral perturbation bounds for singular subspaces.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: dense SVD helpers, orthonormal bases, sin-Θ distances and
//!   Haar sampling.
//! * [`perturbation`]: block decomposition of a perturbation and the separate
//!   left/right subspace bounds, Wedin's two-sided bound, the projection bound
//!   and per-segment bounds.
//! * [`adversarial`]: worst-case and confusable `(X, Z)` constructions that
//!   show the bounds are sharp.
//! * [`denoising`], [`clustering`], [`cca`]: statistical applications.
//! * [`simulation`]: seeded Monte-Carlo runner, summary tables and export.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversarial;
pub mod cca;
pub mod clustering;
pub mod denoising;
mod error;
pub mod linalg;
pub mod montecarlo;
pub mod perturbation;
pub mod simulation;

pub use error::{Error, Result};
pub use linalg::{Matrix, OrthonormalBasis, SinThetaDistances, SvdFactorization};
pub use montecarlo::{Estimate, Trials};
