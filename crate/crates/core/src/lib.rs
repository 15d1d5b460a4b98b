//! Spectral analysis of the Hill operator `-y'' + q(x) y` with a complex 1-periodic
//! potential: discriminant and Floquet solutions, band curves, projection norms,
//! spectral-singularity diagnostics, and spectral-expansion reconstructions.

pub mod diagnostics;
pub mod error;
pub mod expansion;
pub mod floquet;
pub mod galerkin;
pub mod json;
pub mod ode;
pub mod par;
pub mod potential;
pub mod spectrum;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use potential::FourierPotential;
