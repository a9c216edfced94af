//! Numerical laboratory for the randomly shifted curves model.
//!
//! Each observation is a periodic template `f0` translated by a random shift
//! `tau ~ g0` and observed in complex white noise. In the Fourier domain an
//! observation becomes a location mixture of standard complex Gaussians whose
//! means are the rotated coefficient vectors `theta . phi`.
//!
//! The crate provides:
//!
//! * [`fourier`]: band-limited curves, the shift-rotation action, Sobolev norms.
//! * [`measure`]: shift laws (atomic measures, grid densities), Dirichlet-process
//!   draws, eta-separation and trigonometric moment matching.
//! * [`model`]: simulation, mixture densities and likelihood ratios.
//! * [`divergence`]: closed-form and Monte-Carlo Hellinger / TV / KL / V / M_delta.
//! * [`prior`]: the sieve prior on `(f, g)` and its calibration presets.
//! * [`mcmc`]: a data-augmented Metropolis-within-Gibbs posterior sampler.
//! * [`certify`]: bracket construction and numeric audits of the bounds used in
//!   the contraction argument.
//! * [`study`]: the contraction-rate experiment and its reports.
//! * [`io`]: CSV formats for curves, measures, datasets and reports.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod config;
pub mod divergence;
pub mod error;
pub mod fourier;
pub mod io;
pub mod mcmc;
pub mod measure;
pub mod model;
mod nnls;
pub mod prior;
pub mod rng;
pub mod study;

pub use error::{Error, Result};
pub use fourier::{FourierCurve, NormKind};
pub use measure::{DiscreteMeasure, GridDensity, ShiftMeasure};
pub use num_complex::Complex64;
