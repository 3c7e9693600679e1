//! Discrete function spaces: horizontally periodic Fourier representation in
//! (x₁, x₂) tensored with Chebyshev collocation in x₃, split per layer.
//!
//! Conventions used throughout the crate:
//!
//! * A horizontally periodic field is stored as complex Fourier coefficients
//!   c_ξ with f(x′) = Σ_ξ c_ξ e^{iξ·x′}, where ξ = (k₁/L₁, k₂/L₂) and the
//!   integer modes satisfy |kᵢ| ≤ N_h. Storage is FFT-ordered of size
//!   (2N_h+1)² so index i maps to k = i for i ≤ N_h and k = i − (2N_h+1)
//!   otherwise. Real-valued fields keep Hermitian symmetry c_{−ξ} = conj(c_ξ).
//! * The vertical direction uses Chebyshev–Gauss–Lobatto nodes mapped to
//!   [0, ℓ] (upper layer) and [−b, 0] (lower layer), stored ascending so the
//!   two layers share the interface node x₃ = 0.
//! * Horizontal integrals reduce to the ξ = 0 coefficient times the area
//!   4π²L₁L₂; vertical integrals use Clenshaw–Curtis weights.

pub mod cheb;
pub mod fft;
pub mod grid;
pub mod surface;
pub mod volume;

pub use grid::Grid;
pub use surface::{Surface, SurfaceField};
pub use volume::{BoundaryLoc, Layer, VolumeField};
