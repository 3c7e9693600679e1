//! The Taylor remainder of the pressure expansion around the equilibrium:
//!
//!   ℛ = ∫_{ρ̄}^{ρ̄+a} (ρ̄ + a − z) P″(z) dz,   a = q + ∂₃ρ̄ θ,
//!
//! evaluated pointwise on the physical grid by adaptive quadrature. ℛ is
//! exactly quadratic at leading order: for P(z) = Kz² it equals K a².

use ndarray::Array3;

use crate::equilibrium::EquilibriumProfile;
use crate::error::{CoreError, Result};
use crate::quad::adaptive_simpson;
use crate::spectral::fft::HorizontalTransform;
use crate::spectral::{Grid, Layer, VolumeField};

/// Compute ℛ as a spectral volume field from the current q and θ. Errors if
/// the total density ρ̄ + a is not positive everywhere.
pub fn taylor_remainder(
    q: &VolumeField,
    theta: &VolumeField,
    grid: &Grid,
    transform: &HorizontalTransform,
    profile: &EquilibriumProfile,
) -> Result<VolumeField> {
    let mut phys: [Array3<f64>; 2] = [
        Array3::zeros((grid.m_pad(), grid.m_pad(), grid.n_v_plus + 1)),
        Array3::zeros((grid.m_pad(), grid.m_pad(), grid.n_v_minus + 1)),
    ];
    for (slot, layer) in [(0usize, Layer::Plus), (1, Layer::Minus)] {
        let qp = q.to_physical(grid, transform, layer);
        let tp = theta.to_physical(grid, transform, layer);
        let nodes = match layer {
            Layer::Plus => grid.nodes_plus(),
            Layer::Minus => grid.nodes_minus(),
        };
        let law = match layer {
            Layer::Plus => &profile.law_plus,
            Layer::Minus => &profile.law_minus,
        };
        let out = &mut phys[slot];
        for (k, &x3) in nodes.iter().enumerate() {
            let (rho_bar, d_rho) = match layer {
                Layer::Plus => (profile.rho_plus(x3), profile.d_rho_plus(x3)),
                Layer::Minus => (profile.rho_minus(x3), profile.d_rho_minus(x3)),
            };
            let p2_scale = law.d2pressure(rho_bar).unwrap_or(1.0).abs().max(1.0);
            for i in 0..grid.m_pad() {
                for j in 0..grid.m_pad() {
                    let a = qp[(i, j, k)] + d_rho * tp[(i, j, k)];
                    let total = rho_bar + a;
                    if total <= 0.0 {
                        return Err(CoreError::InvalidState(format!(
                            "total density {total} <= 0 at x3 = {x3}; \
                             perturbation too large for the pressure expansion"
                        )));
                    }
                    if a == 0.0 {
                        continue;
                    }
                    let tol = 1e-6 * a * a * p2_scale + 1e-300;
                    let upper = total;
                    out[(i, j, k)] = adaptive_simpson(
                        |z| (upper - z) * law.d2pressure(z).unwrap_or(0.0),
                        rho_bar,
                        upper,
                        tol,
                    );
                }
            }
        }
    }
    let [pp, pm] = phys;
    Ok(VolumeField::from_physical(grid, transform, &pp, &pm))
}
