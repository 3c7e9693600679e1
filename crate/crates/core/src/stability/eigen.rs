//! Dense generalized eigensolves for the mode pencils.
//!
//! The pencil λBx = Ax carries algebraic rows (zero rows of B), so it has
//! infinite eigenvalues. We solve by shift-invert: with a real shift s,
//! C = (A − sB)⁻¹B has eigenvalues μ = 1/(λ − s), the infinite ones landing
//! harmlessly at μ = 0. Before that, the similarity u₁ → iu₁, u₂ → iu₂
//! makes all pencil coefficients real, so the eigensolve runs on a real
//! matrix and the spectrum is exactly conjugate-symmetric.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::operator::ModeOperator;
use crate::error::{CoreError, Result};

/// Eigenvalues flagged spurious above this magnitude (images of the pencil's
/// infinite eigenvalues under roundoff).
pub const SPURIOUS_CUTOFF: f64 = 1e8;

/// Linear-stability tolerance: stable means Re λ_max below this.
pub const STABLE_TOL: f64 = 1e-8;

/// Outcome of a per-mode growth-rate computation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthRateResult {
    pub k1: i64,
    pub k2: i64,
    pub xi: (f64, f64),
    /// Largest-real-part finite eigenvalue.
    pub lambda_max: (f64, f64),
    /// Retained finite spectrum as (re, im) pairs.
    pub spectrum: Vec<(f64, f64)>,
    pub stable: bool,
    /// Count of near-zero eigenvalues (|λ| < tolerance); nonzero only in
    /// configurations with genuine marginal directions.
    pub n_marginal: usize,
}

/// Eigenvalues of the real generalized pencil λBx = Ax by shift-invert,
/// with infinite eigenvalues filtered out.
pub fn solve_pencil(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(CoreError::Eigen("pencil matrices must be square and equal-sized".into()));
    }
    let scale = a.amax().max(1.0);
    let mut shift = 0.37 * scale.sqrt().min(scale);
    let mut last_err = None;
    for _ in 0..5 {
        let m = a - b.scale(shift);
        match m.lu().solve(b) {
            Some(c) => {
                let eig = c.complex_eigenvalues();
                let mut out = Vec::with_capacity(n);
                for mu in eig.iter() {
                    if mu.norm() * SPURIOUS_CUTOFF > 1.0 {
                        let lambda = shift + mu.inv();
                        if lambda.norm() <= SPURIOUS_CUTOFF {
                            out.push(Complex64::new(lambda.re, lambda.im));
                        }
                    }
                }
                if out.is_empty() {
                    return Err(CoreError::Eigen(
                        "no finite eigenvalues retained after filtering".into(),
                    ));
                }
                return Ok(out);
            }
            None => {
                last_err = Some(format!("A - sB singular at shift {shift}"));
                shift = shift * 1.618 + 0.1 * scale.sqrt();
            }
        }
    }
    Err(CoreError::Eigen(format!(
        "shift-invert failed: {}",
        last_err.unwrap_or_default()
    )))
}

/// Realify the complex pencil via the diagonal similarity u₁ → iu₁, u₂ → iu₂.
/// Errors if the result is not real (which would indicate an assembly bug).
fn realify(op: &ModeOperator) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = op.layout.n();
    let s = |col: usize| -> Complex64 {
        // columns of u₁ and u₂ blocks carry the factor i
        let lo = op.layout.np + op.layout.nm;
        let hi = 3 * (op.layout.np + op.layout.nm);
        if col >= lo && col < hi {
            Complex64::new(0.0, 1.0)
        } else {
            Complex64::new(1.0, 0.0)
        }
    };
    let scale = op
        .a_mat
        .iter()
        .map(|c| c.norm())
        .fold(1.0f64, f64::max);
    let mut ar = DMatrix::<f64>::zeros(n, n);
    let mut br = DMatrix::<f64>::zeros(n, n);
    for r in 0..n {
        let sr_inv = s(r).inv();
        for c in 0..n {
            let f = sr_inv * s(c);
            let va = op.a_mat[(r, c)] * f;
            let vb = op.b_mat[(r, c)] * f;
            if va.im.abs() > 1e-10 * scale || vb.im.abs() > 1e-10 * scale {
                return Err(CoreError::Eigen(format!(
                    "pencil not real after iξ similarity at ({r}, {c}): {va}, {vb}"
                )));
            }
            ar[(r, c)] = va.re;
            br[(r, c)] = vb.re;
        }
    }
    Ok((ar, br))
}

/// Solve the mode pencil and report the largest-real-part finite eigenvalue.
pub fn growth_rate(op: &ModeOperator) -> Result<GrowthRateResult> {
    let (ar, br) = realify(op)?;
    let spectrum = solve_pencil(&ar, &br)?;
    let lambda_max = spectrum
        .iter()
        .copied()
        .max_by(|x, y| x.re.partial_cmp(&y.re).expect("finite eigenvalues"))
        .expect("nonempty spectrum");
    let n_marginal = spectrum.iter().filter(|l| l.norm() < STABLE_TOL).count();
    Ok(GrowthRateResult {
        k1: op.k1,
        k2: op.k2,
        xi: op.xi,
        lambda_max: (lambda_max.re, lambda_max.im),
        spectrum: spectrum.iter().map(|l| (l.re, l.im)).collect(),
        stable: lambda_max.re < STABLE_TOL,
        n_marginal,
    })
}
