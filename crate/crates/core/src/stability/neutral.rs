//! Neutral surface tension per mode: bisection on σ₋ ↦ Re λ_max(ξ; σ₋).

use super::eigen::growth_rate;
use super::operator::assemble_mode_operator;
use crate::equilibrium::{EquilibriumProfile, PhysicalParams};
use crate::error::{CoreError, Result};
use crate::spectral::Grid;

/// Find σ₋* with Re λ_max(ξ; σ₋*) = 0 by bisection on the bracket, to
/// absolute tolerance 1e−4·σ_c. Requires a Rayleigh–Taylor-unstable jump
/// (⟦ρ̄⟧ > 0) and a sign change of the growth rate over the bracket.
pub fn find_neutral_sigma(
    profile: &EquilibriumProfile,
    params: &PhysicalParams,
    grid: &Grid,
    k1: i64,
    k2: i64,
    bracket: (f64, f64),
) -> Result<f64> {
    if profile.jump <= 0.0 {
        return Err(CoreError::Bracket(format!(
            "no instability to neutralize: density jump {} is not positive",
            profile.jump
        )));
    }
    if !(params.sigma_plus > 0.0) {
        return Err(CoreError::InvalidParameter(
            "neutral-sigma search varies sigma_minus > 0 and needs sigma_plus > 0".into(),
        ));
    }
    let (mut lo, mut hi) = bracket;
    if !(lo >= 0.0 && hi > lo) {
        return Err(CoreError::Bracket(format!("invalid bracket [{lo}, {hi}]")));
    }
    let rate = |sigma: f64| -> Result<f64> {
        let mut p = *params;
        p.sigma_minus = sigma;
        let op = assemble_mode_operator(k1, k2, profile, &p, grid)?;
        Ok(growth_rate(&op)?.lambda_max.0)
    };
    let f_lo = rate(lo)?;
    let f_hi = rate(hi)?;
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(CoreError::Bracket(format!(
            "growth rate does not change sign on [{lo}, {hi}]: Re lambda = {f_lo}, {f_hi}"
        )));
    }
    let tol = 1e-4 * profile.sigma_c;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if rate(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
