//! Per-horizontal-mode linearization of the perturbed system: operator
//! pencils, growth rates, neutral surface tension, the sharp Poincaré
//! constant, and energy-form positivity.

pub mod eigen;
pub mod neutral;
pub mod operator;
pub mod poincare;
pub mod positivity;

pub use eigen::{growth_rate, solve_pencil, GrowthRateResult};
pub use neutral::find_neutral_sigma;
pub use operator::{assemble_mode_operator, ModeOperator, RowKind};
pub use poincare::{poincare_ratio, sharp_poincare_constant};
pub use positivity::{energy_form_positivity, PositivityReport};

use rayon::prelude::*;

use crate::equilibrium::{EquilibriumProfile, PhysicalParams};
use crate::error::Result;
use crate::spectral::Grid;

/// One representative per Hermitian-conjugate pair of retained lattice modes
/// (k₁ > 0, or k₁ = 0 with k₂ ≥ 0), the mean mode included.
pub fn representative_modes(grid: &Grid) -> Vec<(i64, i64)> {
    let nh = grid.n_h as i64;
    let mut out = Vec::new();
    for k1 in 0..=nh {
        for k2 in -nh..=nh {
            if k1 == 0 && k2 < 0 {
                continue;
            }
            out.push((k1, k2));
        }
    }
    out
}

/// Growth rates for a set of modes, computed in parallel.
pub fn stability_map(
    profile: &EquilibriumProfile,
    params: &PhysicalParams,
    grid: &Grid,
    modes: &[(i64, i64)],
) -> Result<Vec<GrowthRateResult>> {
    modes
        .par_iter()
        .map(|&(k1, k2)| {
            let op = assemble_mode_operator(k1, k2, profile, params, grid)?;
            growth_rate(&op)
        })
        .collect()
}
