//! Spatio-temporal Bayesian GLM for surface fMRI.
//!
//! Data on a triangulated 2-D domain (cortical-surface vertices or masked
//! image pixels) are modeled as
//!
//! ```text
//! y_vt = Σ_k x_kt β_kv + ε_vt
//! ```
//!
//! with two dependence structures treated jointly:
//!
//! * **Temporal**: the noise at each vertex is fractional Gaussian noise
//!   whose Hurst parameter is shared within data-driven clusters of regions.
//!   An orthonormal wavelet transform approximately decorrelates the noise,
//!   so the transformed likelihood is diagonal with closed-form per-level
//!   variances ([`fgn`], [`wavelet`], [`hurst`]).
//! * **Spatial**: each activation field `β_k` gets a Gaussian Markov random
//!   field prior obtained from an SPDE discretized with linear finite
//!   elements, with log-variance driven by a local variability score so the
//!   prior is non-stationary ([`mesh`], [`spde`]).
//!
//! Given the (low-dimensional) hyperparameters the latent fields are exactly
//! Gaussian; [`inference`] computes the conditional posteriors in closed form
//! and integrates over a curvature-scaled hyperparameter grid. Activation is
//! reported through joint-posterior excursion sets ([`excursions`]).
//!
//! The [`harness`] module holds the simulation experiments and the pieces
//! used by the `stglm` command-line interface.

pub mod design;
pub mod error;
pub mod excursions;
pub mod fgn;
pub mod harness;
pub mod hurst;
pub mod inference;
pub mod io;
pub mod mesh;
pub mod optim;
pub mod sparse;
pub mod spde;
pub mod wavelet;

pub use error::{Error, Result};
