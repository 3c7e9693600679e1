//! Shared fixtures for the solver benchmarks.

use rtwave_core::equilibrium::{
    build_equilibrium, EquilibriumProfile, PhysicalParams, PressureLaw,
};
use rtwave_core::spectral::Grid;

/// Stable light-over-heavy reference configuration on the unit torus.
pub fn fixture(n_v: usize) -> (EquilibriumProfile, PhysicalParams, Grid) {
    let params = PhysicalParams {
        g: 1.0,
        p_atm: 1.0,
        ell: 1.0,
        b: 1.0,
        l1: 1.0,
        l2: 1.0,
        mu_plus: 1.0,
        mu_minus: 1.0,
        mu_bulk_plus: 0.0,
        mu_bulk_minus: 0.0,
        sigma_plus: 1.0,
        sigma_minus: 1.0,
    };
    let lp = PressureLaw::polytropic(1.0, 2.0);
    let lm = PressureLaw::polytropic(0.25, 2.0);
    let profile = build_equilibrium(&lp, &lm, &params, 24).unwrap();
    let grid = Grid::new(1.0, 1.0, 4, n_v, n_v, 1.0, 1.0).unwrap();
    (profile, params, grid)
}
