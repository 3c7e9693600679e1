//! The sharp Poincaré constant on zero-mean periodic fields:
//! min ‖∇_*ζ‖₀²/‖ζ‖₀² over the nonzero lattice = 1/max{L₁², L₂²}.

use crate::error::{CoreError, Result};
use crate::spectral::{Grid, SurfaceField};

/// Minimum of |ξ|² over nonzero retained lattice modes; equals
/// 1/max{L₁², L₂²} exactly (attained by the lowest mode of the longer
/// period).
pub fn sharp_poincare_constant(grid: &Grid) -> f64 {
    let mut min = f64::INFINITY;
    for i in 0..grid.m() {
        for j in 0..grid.m() {
            if i == 0 && j == 0 {
                continue;
            }
            let n = grid.xi_norm(i, j);
            min = min.min(n * n);
        }
    }
    min
}

/// Rayleigh quotient ‖∇_*ζ‖₀²/‖ζ‖₀² for a zero-mean field; rejects fields
/// with a mean component, for which the inequality fails (ratio 0).
pub fn poincare_ratio(zeta: &SurfaceField, grid: &Grid) -> Result<f64> {
    let norm = zeta.sobolev_norm(grid, 0.0);
    if norm == 0.0 {
        return Err(CoreError::InvalidParameter("zero field".into()));
    }
    let mean = zeta.coeffs[(0, 0)].norm();
    if mean > 1e-13 * norm {
        return Err(CoreError::InvalidParameter(
            "Poincare ratio requires a zero-mean field".into(),
        ));
    }
    let g = zeta.grad_norm(grid);
    Ok(g * g / (norm * norm))
}
