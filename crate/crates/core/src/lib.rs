//! Numerical laboratory for two layers of compressible, barotropic, viscous
//! fluid separated by free interfaces on a horizontally periodic slab.
//!
//! The crate is organized around the pipeline
//!
//! 1. [`equilibrium`] — steady stratified density profiles, interface jump,
//!    critical surface tension, equilibrium masses;
//! 2. [`spectral`] — Fourier (horizontal) x Chebyshev (vertical) function
//!    spaces per layer with derivatives, quadrature, traces and Sobolev norms;
//! 3. [`geometry`] — Poisson extensions of the surface functions and the
//!    flattening coordinate transform with its Jacobian fields;
//! 4. [`stability`] — per-wavenumber linearized operator pencils, growth
//!    rates, neutral surface tension and energy-form positivity;
//! 5. [`sim`] — semi-implicit time stepping of the perturbed nonlinear system
//!    with energy/dissipation and mass tracking;
//! 6. [`analysis`] — decay-rate fitting and discrete functional-inequality
//!    checks (Korn constant, deviatoric-gradient kernel, extension bounds).

pub mod analysis;
pub mod equilibrium;
pub mod error;
pub mod geometry;
pub mod sim;
pub mod spectral;
pub mod stability;

pub(crate) mod quad;

pub use error::{CoreError, Result};
